//! Complete searches built on the CB-DFS core and the evaluator group.

use std::cmp::Reverse;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};
use std::fmt::Debug;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use batchida_core::{
    Action, Cost, Domain, HeuristicSource, Instance, IterationStats, PatternSpace, SearchError, SearchResult,
    SearchStats, StateError,
};

pub use batchida_core::{bfs_oracle, idastar, IdaOptions};

use crate::cbdfs::{
    auto_d_init, cb_dfs, update_threshold, BoundCollector, Frontier, Shared, SolutionSlot, StopFlag, ThreadCtx,
    ThreadReport, ThreadStatus, WorkQueue,
};
use crate::eval::{BatchEvaluator, BatchPolicy, EvaluatorGroup, Latency, TableSim};

/// How deep the tree top is enumerated before the parallel phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DInit {
    /// Smallest depth whose deduplicated frontier has at least
    /// `4 * threads * work_num` works, capped at [`DInit::AUTO_CAP`].
    Auto,
    Fixed(usize),
}

impl DInit {
    pub const AUTO_CAP: usize = 6;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchConfig {
    /// Search threads, n.
    pub threads: usize,
    /// Works interleaved per thread, k.
    pub work_num: usize,
    /// Target batch size, B.
    pub batch_size: usize,
    /// Partial-flush timeout; `None` disables it.
    pub timeout: Option<Duration>,
    /// Evaluators, E.
    pub evaluators: usize,
    pub d_init: DInit,
    pub pruning: bool,
    pub flush_on_stall: bool,
    pub seed: u64,
    /// Panic on a violated search invariant rather than only counting it.
    pub strict: bool,
    pub time_limit: Option<Duration>,
    /// Give up once the bound would exceed this.
    pub max_bound: Option<Cost>,
    /// Per-thread expansion limit for one CB-DFS pass.
    pub expansion_budget: Option<u64>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            threads: 1,
            work_num: 1,
            batch_size: 1,
            timeout: Some(BatchPolicy::DEFAULT_TIMEOUT),
            evaluators: 1,
            d_init: DInit::Auto,
            pruning: true,
            flush_on_stall: true,
            seed: 0,
            strict: cfg!(debug_assertions),
            time_limit: None,
            max_bound: None,
            expansion_budget: None,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |what: &str| Err(SearchError::State(StateError::Invalid(what.to_string())));
        if self.threads == 0 {
            return bad("threads must be at least 1");
        }
        if self.work_num == 0 {
            return bad("work_num must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.evaluators == 0 || self.evaluators > self.threads {
            return bad("evaluators must be between 1 and the thread count");
        }
        Ok(())
    }

    pub fn batch_policy(&self) -> BatchPolicy {
        BatchPolicy { batch_size: self.batch_size, timeout: self.timeout, flush_on_stall: self.flush_on_stall }
    }

    pub fn ida_options(&self) -> IdaOptions {
        IdaOptions { pruning: self.pruning, max_bound: self.max_bound }
    }
}

/// A group of `cfg.evaluators` table-backed evaluators sharing `source`.
pub fn table_group<D>(domain: &D, source: &HeuristicSource, latency: Latency, cfg: &SearchConfig) -> Result<EvaluatorGroup, SearchError>
where
    D: PatternSpace + Clone + Debug + 'static,
{
    cfg.validate()?;
    let backends = (0..cfg.evaluators)
        .map(|_| -> Result<Arc<dyn BatchEvaluator>, SearchError> {
            let sim = TableSim::new(domain.clone(), source.clone(), latency)
                .map_err(|e| SearchError::State(StateError::Invalid(e.to_string())))?;
            Ok(Arc::new(sim))
        })
        .collect::<Result<Vec<_>, _>>()?;
    EvaluatorGroup::new(backends, cfg.threads, cfg.batch_policy())
}

/// Batch IDA*: root bound from a single evaluation, then repeated parallel
/// CB-DFS passes over the works below `d_init`, raising the bound to the
/// smallest f that exceeded it until a goal is found.
pub fn batch_idastar<D: Domain>(
    domain: &D,
    instance: &Instance<D::State>,
    group: &EvaluatorGroup,
    cfg: &SearchConfig,
) -> Result<SearchResult, SearchError> {
    let started = Instant::now();
    let deadline = cfg.time_limit.map(|t| started + t);
    cfg.validate()?;
    if group.threads() != cfg.threads {
        return Err(SearchError::State(StateError::Invalid("evaluator group routes a different thread count".into())));
    }
    let (start, goal) = (&instance.start, &instance.goal);
    if !domain.is_solvable(start, goal) {
        return Err(SearchError::Exhausted);
    }

    let mut result = SearchResult::default();
    let root_h = group.evaluate_single(&domain.encode_features(start));
    let d_init = match cfg.d_init {
        DInit::Fixed(d) => d,
        DInit::Auto => auto_d_init(domain, start, cfg.pruning, 4 * cfg.threads * cfg.work_num, DInit::AUTO_CAP),
    };
    let frontier = Frontier::build(domain, start, d_init, cfg.pruning)?;
    let features: Vec<_> = frontier.nodes[1..].iter().map(|n| domain.encode_features(&n.state)).collect();
    let mut h = vec![root_h];
    h.extend(group.evaluate_direct(&features));
    result.stats.merge(&group.take_stats());

    let mut bound = root_h;
    loop {
        if deadline.is_some_and(|d| Instant::now() >= d) || cfg.max_bound.is_some_and(|m| bound > m) {
            return Err(SearchError::Interrupted);
        }
        result.threshold_history.push(bound);
        let gate = frontier.gate(bound, &h, goal, false);
        let mut iter = IterationStats { threshold: bound, expanded: gate.expanded, generated: gate.generated, ..Default::default() };
        let mut collector = gate.collector;

        let mut solution = gate.solution;
        if solution.is_none() {
            let queue = WorkQueue::new(gate.active);
            let (stop, slot, timed_out) = (StopFlag::default(), SolutionSlot::default(), AtomicBool::new(false));
            let shared = Shared { queue: &queue, group, stop: &stop, solution: &slot, deadline, timed_out: &timed_out };
            let reports = run_threads(domain, goal, bound, &shared, cfg)?;

            let batches = group.take_stats();
            iter.batches = batches.batches;
            iter.evaluated = batches.evaluated;
            result.stats.merge(&batches);
            let mut peak = 0;
            for r in &reports {
                iter.expanded += r.stats.expanded;
                iter.generated += r.stats.generated;
                result.stats.completeness_violations += r.stats.completeness_violations;
                result.stats.alignment_violations += r.stats.alignment_violations;
                peak += r.stats.peak_live_frames;
                collector.merge(&r.collector);
            }
            result.stats.peak_live_frames = result.stats.peak_live_frames.max(peak);
            solution = slot.take();
            if solution.is_none() {
                if timed_out.load(Ordering::Acquire) {
                    return Err(SearchError::Interrupted);
                }
                if reports.iter().any(|r| r.status == ThreadStatus::BudgetExhausted) {
                    return Err(SearchError::Interrupted);
                }
                debug_assert!(reports.iter().all(|r| r.work_expansions == r.stats.expanded));
            }
        }
        result.stats.expanded += iter.expanded;
        result.stats.generated += iter.generated;
        result.stats.iterations.push(iter);

        if let Some(path) = solution {
            result.cost = path.len() as Cost;
            result.solution = path;
            result.stats.wall_time = started.elapsed();
            debug_assert!(result.verify(domain, start, goal));
            return Ok(result);
        }
        bound = update_threshold(&collector, bound)?;
    }
}

fn run_threads<D: Domain>(
    domain: &D,
    goal: &D::State,
    bound: Cost,
    shared: &Shared<'_, D::State>,
    cfg: &SearchConfig,
) -> Result<Vec<ThreadReport<D::State>>, SearchError> {
    shared.group.run(|| {
        thread::scope(|scope| {
            let handles: Vec<_> = (0..cfg.threads)
                .map(|thread_id| {
                    scope.spawn(move || {
                        let ctx = ThreadCtx {
                            domain,
                            goal,
                            thread_id,
                            work_num: cfg.work_num,
                            pruning: cfg.pruning,
                            strict: cfg.strict,
                            trace: false,
                        };
                        let report = cb_dfs(&ctx, bound, shared, cfg.expansion_budget);
                        if report.is_err() {
                            shared.stop.raise();
                        }
                        report
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("search thread panicked")).collect()
        })
    })
}

/// Asynchronous parallel IDA*: the same engine with lookups answered on
/// the spot instead of batched.
pub fn aidastar<D>(domain: &D, instance: &Instance<D::State>, source: &HeuristicSource, cfg: &SearchConfig) -> Result<SearchResult, SearchError>
where
    D: PatternSpace + Clone + Debug + 'static,
{
    let sim = TableSim::new(domain.clone(), source.clone(), Latency::ZERO)
        .map_err(|e| SearchError::State(StateError::Invalid(e.to_string())))?;
    aidastar_with(domain, instance, Arc::new(sim), cfg)
}

/// [`aidastar`] over an arbitrary backend, called once per lookup.
pub fn aidastar_with<D: Domain>(
    domain: &D,
    instance: &Instance<D::State>,
    backend: Arc<dyn BatchEvaluator>,
    cfg: &SearchConfig,
) -> Result<SearchResult, SearchError> {
    let group = EvaluatorGroup::immediate(backend, cfg.threads);
    let cfg = SearchConfig { evaluators: 1, ..cfg.clone() };
    batch_idastar(domain, instance, &group, &cfg)
}

struct AstarNode<S> {
    state: S,
    g: Cost,
    parent: Option<usize>,
    action: Option<Action>,
}

type OpenKey = Reverse<(Cost, Cost, u64, usize)>;

struct Astar<S> {
    arena: Vec<AstarNode<S>>,
    best_g: HashMap<S, Cost>,
    /// Keyed by (f, inverted g, insertion sequence, node).
    open: BinaryHeap<OpenKey>,
    seq: u64,
    /// Nodes awaiting their heuristic, with the f of their parent.
    pending: Vec<(usize, Cost, crate::eval::Ticket)>,
}

impl<S: Clone + Eq + std::hash::Hash> Astar<S> {
    fn push_open(&mut self, f: Cost, idx: usize) {
        self.seq += 1;
        let g = self.arena[idx].g;
        self.open.push(Reverse((f, Cost::MAX - g, self.seq, idx)));
    }

    /// Waits for every pending node and moves it into the open list,
    /// dropping entries superseded by a cheaper path.
    fn settle(&mut self, group: &EvaluatorGroup) -> Result<(), SearchError> {
        for (idx, _, ticket) in std::mem::take(&mut self.pending) {
            let h = group.wait(0, &ticket)?;
            let node = &self.arena[idx];
            if self.best_g.get(&node.state) == Some(&node.g) {
                self.push_open(node.g + h, idx);
            }
        }
        Ok(())
    }
}

/// Best-first search whose generated nodes wait in the evaluator's batch
/// buffer until their heuristic arrives, and only then enter the open list.
///
/// The open list is ordered by f, then larger g, then insertion order.
/// Duplicates are detected through the best g seen per state; a state
/// reached again more cheaply is re-submitted and the stale entry dropped
/// when it surfaces. A goal is accepted only when it is popped with no
/// evaluations outstanding.
pub fn batch_astar<D: Domain>(
    domain: &D,
    instance: &Instance<D::State>,
    group: &EvaluatorGroup,
    cfg: &SearchConfig,
) -> Result<SearchResult, SearchError> {
    let started = Instant::now();
    let deadline = cfg.time_limit.map(|t| started + t);
    let (start, goal) = (&instance.start, &instance.goal);
    if !domain.is_solvable(start, goal) {
        return Err(SearchError::Exhausted);
    }
    let mut result = SearchResult::default();
    let root_h = group.evaluate_single(&domain.encode_features(start));

    let mut search = Astar {
        arena: vec![AstarNode { state: start.clone(), g: 0, parent: None, action: None }],
        best_g: HashMap::from([(start.clone(), 0)]),
        open: BinaryHeap::new(),
        seq: 0,
        pending: Vec::new(),
    };
    search.push_open(root_h, 0);
    let mut expanded = 0u64;
    let mut generated = 0u64;
    let mut top_f: Option<Cost> = None;

    let outcome = group.run(|| -> Result<usize, SearchError> {
        group.register(0);
        let out = loop {
            if deadline.is_some_and(|d| Instant::now() >= d) {
                break Err(SearchError::Interrupted);
            }
            if !search.pending.is_empty() {
                let lower = search.pending.iter().map(|p| p.1).min().expect("pending is nonempty");
                let blocked = search.open.peek().is_none_or(|Reverse((f, ..))| *f > lower);
                if blocked || search.pending.len() >= cfg.batch_size {
                    group.flush();
                    search.settle(group)?;
                }
            }
            let Some(Reverse((f, _, _, idx))) = search.open.pop() else {
                break Err(SearchError::Exhausted);
            };
            let (g, state) = (search.arena[idx].g, search.arena[idx].state.clone());
            if search.best_g.get(&state) != Some(&g) {
                continue;
            }
            if top_f.is_none_or(|t| f > t) {
                top_f = Some(f);
            }
            if &state == goal {
                if search.pending.is_empty() {
                    break Ok(idx);
                }
                search.push_open(f, idx);
                group.flush();
                search.settle(group)?;
                continue;
            }
            expanded += 1;
            for a in domain.actions(&state, search.arena[idx].action, cfg.pruning) {
                let child = domain.apply(&state, a)?;
                generated += 1;
                let cg = g + 1;
                match search.best_g.entry(child.clone()) {
                    Entry::Occupied(e) if *e.get() <= cg => continue,
                    Entry::Occupied(mut e) => {
                        e.insert(cg);
                    }
                    Entry::Vacant(e) => {
                        e.insert(cg);
                    }
                }
                let ticket = group.submit(0, domain.encode_features(&child))?;
                search.arena.push(AstarNode { state: child, g: cg, parent: Some(idx), action: Some(a) });
                search.pending.push((search.arena.len() - 1, f, ticket));
            }
        };
        group.deregister(0);
        out
    });
    let batches = group.take_stats();
    result.stats.merge(&batches);
    result.stats.expanded = expanded;
    result.stats.generated = generated;
    result.stats.peak_live_frames = search.arena.len();
    let goal_idx = outcome?;

    let arena = &search.arena;
    let mut path = Vec::new();
    let mut i = goal_idx;
    while let (Some(p), Some(a)) = (arena[i].parent, arena[i].action) {
        path.push(a);
        i = p;
    }
    path.reverse();
    result.cost = arena[goal_idx].g;
    result.solution = path;
    let final_f = top_f.unwrap_or(root_h);
    result.threshold_history.push(final_f);
    result.stats.iterations.push(IterationStats {
        threshold: final_f,
        expanded,
        generated,
        batches: batches.batches,
        evaluated: batches.evaluated,
    });
    result.stats.wall_time = started.elapsed();
    debug_assert!(result.verify(domain, start, goal));
    Ok(result)
}

/// Which search to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Idastar,
    Aidastar,
    BatchIdastar,
    BatchAstar,
    Bfs,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] =
        [Algorithm::Idastar, Algorithm::Aidastar, Algorithm::BatchIdastar, Algorithm::BatchAstar, Algorithm::Bfs];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Idastar => "idastar",
            Algorithm::Aidastar => "aidastar",
            Algorithm::BatchIdastar => "batch-idastar",
            Algorithm::BatchAstar => "batch-astar",
            Algorithm::Bfs => "bfs",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s || a.name().replace('-', "_") == s)
    }

    /// Whether the algorithm goes through the batch buffers.
    pub fn is_batched(self) -> bool {
        matches!(self, Algorithm::BatchIdastar | Algorithm::BatchAstar)
    }
}

/// Sequential IDA* with a wall-clock limit.
pub fn idastar_limited<D: Domain>(
    domain: &D,
    instance: &Instance<D::State>,
    heuristic: impl FnMut(&D::State) -> Cost,
    opts: IdaOptions,
    time_limit: Option<Duration>,
) -> Result<SearchResult, SearchError> {
    let started = Instant::now();
    let deadline = time_limit.map(|t| started + t);
    let mut ticks = 0u64;
    let mut r = batchida_core::idastar_by(
        domain,
        &instance.start,
        &instance.goal,
        heuristic,
        opts,
        |_, _| {
            ticks += 1;
            if ticks.is_multiple_of(4096) && deadline.is_some_and(|d| Instant::now() >= d) {
                std::ops::ControlFlow::Break(())
            } else {
                std::ops::ControlFlow::Continue(())
            }
        },
    )?;
    r.stats.wall_time = started.elapsed();
    Ok(r)
}

/// Merges per-thread counters the way [`batch_idastar`] does; exposed for
/// callers driving [`cb_dfs`] themselves.
pub fn merge_reports<S>(reports: &[ThreadReport<S>]) -> (SearchStats, BoundCollector) {
    let mut stats = SearchStats::default();
    let mut peak = 0;
    for r in reports {
        stats.merge(&r.stats);
        peak += r.stats.peak_live_frames;
    }
    stats.peak_live_frames = peak;
    (stats, BoundCollector::reduce(reports.iter().map(|r| &r.collector)))
}
