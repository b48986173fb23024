//! Acceptance run: every criterion prints one PASS/FAIL line; the process
//! exits nonzero if any fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use batchida::algorithms::{aidastar, batch_astar, batch_idastar, table_group, DInit, SearchConfig};
use batchida::cbdfs::auto_d_init;
use batchida::eval::Latency;
use batchida::formats::AnyInstance;
use batchida::suites;
use batchida_core::{
    bfs_oracle, build_pdb, compress_div, compress_mod, goal_distances, idastar, CompressedPdb, Cost, CubeState, Domain,
    HeuristicSource, IdaOptions, Instance, PdbTable, RubiksCube, SearchResult, SlidingTile, TileState,
};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn stp3() -> SlidingTile {
    SlidingTile::new(3).unwrap()
}

fn stp_suite() -> Vec<Instance<TileState>> {
    suites::builtin("stp3")
        .unwrap()
        .into_iter()
        .map(|i| match i {
            AnyInstance::Stp(i) => i,
            AnyInstance::Cube(_) => unreachable!("tile suite"),
        })
        .collect()
}

fn rc_suite() -> Vec<Instance<CubeState>> {
    suites::builtin("rc")
        .unwrap()
        .into_iter()
        .map(|i| match i {
            AnyInstance::Cube(i) => i,
            AnyInstance::Stp(_) => unreachable!("cube suite"),
        })
        .collect()
}

fn additive() -> HeuristicSource {
    let d = stp3();
    let a = build_pdb(&d, &[1, 2, 3, 4], &d.goal(), 1 << 20).unwrap();
    let b = build_pdb(&d, &[5, 6, 7, 8], &d.goal(), 1 << 20).unwrap();
    HeuristicSource::additive([a, b])
}

fn cfg(threads: usize, work_num: usize, batch_size: usize, timeout: Duration) -> SearchConfig {
    SearchConfig { threads, work_num, batch_size, timeout: Some(timeout), strict: false, ..Default::default() }
}

/// One batch_idastar run of the criterion-1 grid, kept for the criteria
/// that read its statistics.
struct GridRun {
    instance: usize,
    cfg: SearchConfig,
    d_init: usize,
    result: SearchResult,
}

/// Everything criterion 1 computes, shared with criteria 3, 4, 5 and 9.
struct StpCampaign {
    oracle: Vec<Cost>,
    reference: Vec<SearchResult>,
    grid: Vec<GridRun>,
    failures: Vec<String>,
    elapsed: Duration,
}

fn grid_configs() -> Vec<SearchConfig> {
    let mut out = Vec::new();
    for n in [1, 2, 4] {
        for k in [1, 4] {
            for b in [1, 32, 256] {
                for t in [Duration::ZERO, Duration::from_millis(2)] {
                    out.push(cfg(n, k, b, t));
                }
            }
        }
    }
    out
}

fn stp_campaign() -> StpCampaign {
    let started = Instant::now();
    let d = stp3();
    let h = additive();
    let instances = stp_suite();
    let mut failures = Vec::new();
    let mut oracle = Vec::new();
    let mut reference = Vec::new();
    let mut grid = Vec::new();
    fn check(failures: &mut Vec<String>, what: String, got: Result<Cost, String>, want: Cost) {
        match got {
            Ok(c) if c == want => {}
            Ok(c) => failures.push(format!("{what}: cost {c}, oracle {want}")),
            Err(e) => failures.push(format!("{what}: {e}")),
        }
    }
    for (i, inst) in instances.iter().enumerate() {
        let truth = bfs_oracle(&d, &inst.start, &inst.goal, 1_000_000).expect("8-puzzle fits the oracle");
        oracle.push(truth);
        let r = idastar(&d, inst, &h, IdaOptions::default()).expect("solvable");
        check(&mut failures, format!("{} idastar", inst.label), Ok(r.cost), truth);
        reference.push(r);
        for n in [2, 4] {
            let r = aidastar(&d, inst, &h, &cfg(n, 4, 1, Duration::ZERO));
            check(&mut failures, format!("{} aidastar n={n}", inst.label), r.map(|r| r.cost).map_err(|e| e.to_string()), truth);
        }
        for c in grid_configs() {
            let group = table_group(&d, &h, Latency::ZERO, &c).unwrap();
            let d_init = auto_d_init(&d, &inst.start, c.pruning, 4 * c.threads * c.work_num, 6);
            match batch_idastar(&d, inst, &group, &c) {
                Ok(result) => {
                    check(
                        &mut failures,
                        format!("{} batch_idastar n={} k={} B={}", inst.label, c.threads, c.work_num, c.batch_size),
                        Ok(result.cost),
                        truth,
                    );
                    grid.push(GridRun { instance: i, cfg: c, d_init, result });
                }
                Err(e) => failures.push(format!("{} batch_idastar: {e}", inst.label)),
            }
        }
        for b in [1, 32, 256] {
            let c = cfg(1, 1, b, Duration::from_millis(2));
            let group = table_group(&d, &h, Latency::ZERO, &c).unwrap();
            let r = batch_astar(&d, inst, &group, &c);
            check(&mut failures, format!("{} batch_astar B={b}", inst.label), r.map(|r| r.cost).map_err(|e| e.to_string()), truth);
        }
    }
    StpCampaign { oracle, reference, grid, failures, elapsed: started.elapsed() }
}

fn criterion_1(c: &StpCampaign) -> Outcome {
    let exhaustive = goal_distances(&stp3(), &stp3().goal(), 200_000).map_err(|e| e.to_string())?;
    for (inst, &cost) in stp_suite().iter().zip(&c.oracle) {
        ensure(exhaustive[&inst.start] as Cost == cost, || format!("{}: BFS oracles disagree", inst.label))?;
    }
    if let Some(f) = c.failures.first() {
        return Err(format!("{} mismatches, first: {f}", c.failures.len()));
    }
    ensure(c.elapsed < Duration::from_secs(300), || format!("took {:.1}s, budget 300s", c.elapsed.as_secs_f64()))?;
    Ok(format!(
        "100 instances x (idastar, 2 aidastar, {} batch_idastar configs, 3 batch_astar) match the BFS oracle in {:.1}s",
        grid_configs().len(),
        c.elapsed.as_secs_f64()
    ))
}

fn criterion_3(c: &StpCampaign) -> Outcome {
    for run in &c.grid {
        let want = &c.reference[run.instance].threshold_history;
        ensure(&run.result.threshold_history == want, || {
            format!(
                "instance {} n={} k={} B={}: {:?} vs idastar {:?}",
                run.instance, run.cfg.threads, run.cfg.work_num, run.cfg.batch_size, run.result.threshold_history, want
            )
        })?;
    }
    Ok(format!("{} batch_idastar runs reproduce idastar's threshold sequence", c.grid.len()))
}

fn criterion_4(c: &StpCampaign, rc: &[SearchResult]) -> Outcome {
    let count = |r: &SearchResult| r.stats.completeness_violations + r.stats.alignment_violations;
    let stp: u64 = c.grid.iter().map(|g| count(&g.result)).sum();
    let cube: u64 = rc.iter().map(count).sum();
    ensure(stp + cube == 0, || format!("{stp} violations on the 8-puzzle grid, {cube} on the cube suite"))?;
    ensure(!rc.is_empty(), || "no cube runs to inspect".into())?;
    Ok(format!("0 violations across {} tile and {} cube runs", c.grid.len(), rc.len()))
}

fn criterion_5(c: &StpCampaign) -> Outcome {
    // With pruning only the search root can use all four moves; below it
    // the move back is never generated.
    let mut checked = 0;
    let mut tightest = 0.0f64;
    for run in c.grid.iter().filter(|r| r.cfg.work_num == 1) {
        let b = if run.cfg.pruning && run.d_init > 0 { 3 } else { stp3().max_branching() };
        let limit = b * run.cfg.threads;
        let seen = run.result.stats.max_batch;
        ensure(seen <= limit, || format!("instance {} n={}: batch of {seen} > {limit}", run.instance, run.cfg.threads))?;
        tightest = tightest.max(seen as f64 / limit as f64);
        checked += 1;
    }
    Ok(format!("{checked} k=1 runs keep max batch <= b*n (highest fill {:.0}% of the bound)", 100.0 * tightest))
}

fn criterion_9(c: &StpCampaign) -> Outcome {
    let b = stp3().max_branching();
    let mut tightest = 0.0f64;
    for run in &c.grid {
        let bound = *run.result.threshold_history.last().unwrap() as usize;
        let cfg = &run.cfg;
        let limit = cfg.threads * cfg.work_num * (bound.saturating_sub(run.d_init) + 1) * b;
        let peak = run.result.stats.peak_live_frames;
        ensure(peak <= limit, || format!("instance {} n={} k={}: {peak} frames > {limit}", run.instance, cfg.threads, cfg.work_num))?;
        tightest = tightest.max(peak as f64 / limit as f64);
    }
    Ok(format!("{} runs within the frame bound (highest {:.0}% of it)", c.grid.len(), 100.0 * tightest))
}

fn rc_campaign() -> (Outcome, Vec<SearchResult>) {
    let started = Instant::now();
    let pdb = build_pdb(&RubiksCube, &[0, 1, 2, 3], &RubiksCube.goal(), 1 << 24).unwrap();
    let h = HeuristicSource::pdb(pdb);
    let configs = [cfg(4, 4, 256, Duration::from_millis(2)), cfg(2, 8, 64, Duration::ZERO)];
    let mut results = Vec::new();
    let mut run = || -> Result<String, String> {
        let suite = rc_suite();
        ensure(suite.len() == 50, || format!("suite has {} instances", suite.len()))?;
        for inst in &suite {
            let len = inst.walk_length.unwrap_or(0);
            ensure((5..=7).contains(&len), || format!("{}: walk length {len}", inst.label))?;
            let truth = bfs_oracle(&RubiksCube, &inst.start, &inst.goal, 20_000_000).map_err(|e| e.to_string())?;
            for c in &configs {
                let group = table_group(&RubiksCube, &h, Latency::ZERO, c).unwrap();
                let r = batch_idastar(&RubiksCube, inst, &group, c).map_err(|e| format!("{}: {e}", inst.label))?;
                ensure(r.cost == truth, || format!("{}: cost {} vs oracle {truth}", inst.label, r.cost))?;
                results.push(r);
            }
        }
        let secs = started.elapsed().as_secs_f64();
        ensure(secs < 600.0, || format!("took {secs:.1}s, budget 600s"))?;
        Ok(format!("50 walks x {} configs match bidirectional BFS in {secs:.1}s", configs.len()))
    };
    let outcome = run();
    (outcome, results)
}

fn criterion_6() -> Outcome {
    let started = Instant::now();
    let d = stp3();
    let dist = goal_distances(&d, &d.goal(), 200_000).map_err(|e| e.to_string())?;
    ensure(dist.len() == 181_440, || format!("{} reachable states", dist.len()))?;
    let pdb = |p: &[u8]| build_pdb(&d, p, &d.goal(), 1 << 22).unwrap();
    let tables: Vec<(String, PdbTable)> =
        [&[0u8, 1, 2, 3][..], &[1, 2, 3, 4], &[5, 6, 7, 8], &[1, 2, 3, 4, 5, 6, 7, 8]]
            .iter()
            .map(|p| (format!("pdb{p:?}"), pdb(p)))
            .collect();
    let mut sources: Vec<(String, HeuristicSource)> = vec![
        ("zero".into(), HeuristicSource::Zero),
        ("manhattan".into(), HeuristicSource::Manhattan),
        ("additive {1..4}+{5..8}".into(), additive()),
    ];
    sources.extend(tables.iter().map(|(n, t)| (n.clone(), HeuristicSource::pdb(t.clone()))));
    let mut compressed: Vec<(String, &PdbTable, CompressedPdb)> = Vec::new();
    for (name, t) in &tables {
        for k in [2, 4, 16] {
            compressed.push((format!("{name}@div{k}"), t, compress_div(t, k).unwrap()));
            compressed.push((format!("{name}@mod{k}"), t, compress_mod(t, k).unwrap()));
        }
    }
    let mut checks = 0u64;
    for (state, &true_d) in &dist {
        for (name, s) in &sources {
            let h = s.lookup(&d, state);
            ensure(h <= true_d as Cost, || format!("{name} gives {h} > {true_d} on {state:?}"))?;
            checks += 1;
        }
        for (name, full, c) in &compressed {
            let hc = c.lookup(&d, state).unwrap();
            let hf = full.lookup(&d, state).unwrap();
            ensure(hc <= hf, || format!("{name} gives {hc} > uncompressed {hf} on {state:?}"))?;
            checks += 1;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    ensure(secs < 120.0, || format!("took {secs:.1}s, budget 120s"))?;
    Ok(format!(
        "{checks} lookups over 181440 states: {} heuristics admissible, {} compressed tables dominated, {secs:.1}s",
        sources.len(),
        compressed.len()
    ))
}

fn criterion_7() -> Outcome {
    // A deep initial phase gives every thread enough small works to keep
    // its k slots busy; with shallow frontiers the longest work dominates
    // and batches stay small whatever B is.
    let d = stp3();
    let h = HeuristicSource::Manhattan;
    let latency = Latency { per_call: Duration::from_micros(500), per_item: Duration::ZERO };
    let instances: Vec<_> = stp_suite().into_iter().take(10).collect();
    let mut rows = Vec::new();
    for b in [1, 8, 64, 256] {
        let c = SearchConfig { d_init: DInit::Fixed(10), ..cfg(4, 32, b, Duration::from_millis(2)) };
        let group = table_group(&d, &h, latency, &c).unwrap();
        let started = Instant::now();
        let (mut calls, mut search_calls) = (0, 0);
        for inst in &instances {
            let r = batch_idastar(&d, inst, &group, &c).map_err(|e| e.to_string())?;
            calls += r.stats.evaluator_calls();
            search_calls += r.stats.batches;
        }
        rows.push((b, calls, search_calls, started.elapsed().as_secs_f64()));
    }
    let summary = rows
        .iter()
        .map(|(b, c, s, t)| format!("B={b}: {c} calls ({s} in search) {t:.2}s"))
        .collect::<Vec<_>>()
        .join(", ");
    let (calls_1, calls_256) = (rows[0].1, rows[3].1);
    ensure(calls_256 * 20 <= calls_1, || format!("calls at B=256 exceed 1/20 of B=1 ({summary})"))?;
    for w in rows.windows(2) {
        ensure(w[1].3 <= w[0].3 * 1.10, || format!("wall time rose from B={} to B={} ({summary})", w[0].0, w[1].0))?;
    }
    Ok(summary)
}

fn criterion_8(c: &StpCampaign) -> Outcome {
    let d = stp3();
    let h = additive();
    let cf = SearchConfig { evaluators: 2, ..cfg(4, 4, 32, Duration::from_millis(2)) };
    let group = table_group(&d, &h, Latency::ZERO, &cf).unwrap();
    let sizes = group.assignment_sizes();
    ensure(sizes == [2, 2], || format!("assignment {sizes:?}"))?;
    for (inst, &truth) in stp_suite().iter().zip(&c.oracle) {
        let r = batch_idastar(&d, inst, &group, &cf).map_err(|e| format!("{}: {e}", inst.label))?;
        ensure(r.cost == truth, || format!("{}: cost {} vs {truth}", inst.label, r.cost))?;
        let v = r.stats.completeness_violations;
        ensure(v == 0, || format!("{}: {v} unevaluated nodes", inst.label))?;
    }
    ensure(group.double_resolutions() == 0, || format!("{} double resolutions", group.double_resolutions()))?;
    Ok("E=2, n=4: assignment [2, 2], all 100 costs unchanged, no lost or double tickets".into())
}

fn criterion_10() -> Outcome {
    let started = Instant::now();
    let (mut submitted, mut rejected) = (0u64, 0u64);
    for seed in 0..100_000u64 {
        let t = common::liveness_schedule(seed).map_err(|e| format!("schedule {seed}: {e}"))?;
        submitted += t.submitted;
        rejected += t.rejected;
    }
    let secs = started.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1}s, budget 60s"))?;
    Ok(format!("100000 schedules, {submitted} tickets resolved once, {rejected} post-shutdown submits refused, {secs:.1}s"))
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut report = |n: u32, name: &'static str, outcome: Outcome| {
        let line = match &outcome {
            Ok(detail) => format!("criterion {n:>2} PASS  {name}: {detail}"),
            Err(why) => format!("criterion {n:>2} FAIL  {name}: {why}"),
        };
        println!("{line}");
        results.push((n, name, outcome));
    };

    let stp = stp_campaign();
    report(1, "optimality equivalence", criterion_1(&stp));
    let (rc_outcome, rc_runs) = rc_campaign();
    report(2, "cube optimality", rc_outcome);
    report(3, "threshold fidelity", criterion_3(&stp));
    report(4, "search invariants", criterion_4(&stp, &rc_runs));
    report(5, "batch-size bound with k=1", criterion_5(&stp));
    report(6, "admissibility and compression dominance", criterion_6());
    report(7, "batch scaling", criterion_7());
    report(8, "multi-evaluator routing", criterion_8(&stp));
    report(9, "live-frame bound", criterion_9(&stp));
    report(10, "batch liveness", criterion_10());

    let failed = results.iter().filter(|r| r.2.is_err()).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
