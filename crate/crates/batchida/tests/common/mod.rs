use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use batchida::eval::{BatchEvaluator, BatchPolicy, EvaluatorGroup, Latency, TableSim, Ticket};
use batchida_core::{Cost, Domain, HeuristicSource, PatternSpace, SearchError, SlidingTile, TileState};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome counts of one randomized schedule.
#[derive(Debug, Default, Clone, Copy)]
pub struct Tally {
    pub submitted: u64,
    pub rejected: u64,
}

fn random_state(rng: &mut ChaCha8Rng) -> TileState {
    let mut cells: Vec<u8> = (0..9).collect();
    cells.shuffle(rng);
    TileState::from_cells(3, &cells).unwrap()
}

/// Runs one randomized schedule of submissions, flushes, waits and an
/// optional mid-flight shutdown against a fresh evaluator group, then
/// checks that every accepted ticket resolved exactly once to the right
/// value.
pub fn liveness_schedule(seed: u64) -> Result<Tally, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = SlidingTile::new(3).unwrap();
    let threads = rng.random_range(1..=3usize);
    let evaluators = rng.random_range(1..=threads);
    let batch_size = rng.random_range(1..=8usize);
    let timeout = match rng.random_range(0..3) {
        0 => None,
        1 => Some(Duration::ZERO),
        _ => Some(Duration::from_micros(rng.random_range(1..200))),
    };
    let flush_on_stall = timeout.is_none() || rng.random_bool(0.5);
    let policy = BatchPolicy { batch_size, timeout, flush_on_stall };
    let backends: Vec<Arc<dyn BatchEvaluator>> = (0..evaluators)
        .map(|_| Arc::new(TableSim::new(d, HeuristicSource::Manhattan, Latency::ZERO).unwrap()) as _)
        .collect();
    let group = EvaluatorGroup::new(backends, threads, policy).map_err(|e| e.to_string())?;
    let shutdown_by = rng.random_bool(0.3).then(|| rng.random_range(0..threads));
    let plans: Vec<(u64, usize)> = (0..threads).map(|_| (rng.random(), rng.random_range(0..40))).collect();

    let accepted: Mutex<Vec<(Ticket, Cost)>> = Mutex::new(Vec::new());
    let rejected = Mutex::new(0u64);
    let outcome: Result<(), String> = group.run(|| {
        thread::scope(|scope| {
            let handles: Vec<_> = plans
                .iter()
                .enumerate()
                .map(|(t, &(seed, ops))| {
                    let (group, accepted, rejected) = (&group, &accepted, &rejected);
                    scope.spawn(move || -> Result<(), String> {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        let mut mine: Vec<(Ticket, Cost)> = Vec::new();
                        group.register(t);
                        let shutdown_at = (shutdown_by == Some(t)).then(|| rng.random_range(0..=ops));
                        let mut result = Ok(());
                        for op in 0..ops {
                            if shutdown_at == Some(op) {
                                group.shutdown();
                            }
                            match rng.random_range(0..10) {
                                0 => group.flush(),
                                1 if !mine.is_empty() => {
                                    let (ticket, want) = &mine[rng.random_range(0..mine.len())];
                                    match group.wait(t, ticket) {
                                        Ok(v) if v == *want => {}
                                        Ok(v) => result = Err(format!("ticket resolved to {v}, expected {want}")),
                                        Err(e) => result = Err(format!("wait failed: {e}")),
                                    }
                                }
                                _ => {
                                    let s = random_state(&mut rng);
                                    let want = d.manhattan(&s).unwrap();
                                    match group.submit(t, d.encode_features(&s)) {
                                        Ok(ticket) => mine.push((ticket, want)),
                                        Err(SearchError::EvaluatorClosed) => *rejected.lock().unwrap() += 1,
                                        Err(e) => result = Err(format!("submit failed: {e}")),
                                    }
                                }
                            }
                        }
                        group.deregister(t);
                        accepted.lock().unwrap().extend(mine);
                        result
                    })
                })
                .collect();
            handles.into_iter().try_for_each(|h| h.join().expect("worker panicked"))
        })
    });
    outcome?;

    let accepted = accepted.into_inner().unwrap();
    for (ticket, want) in &accepted {
        match ticket.poll() {
            Some(v) if v == *want => {}
            Some(v) => return Err(format!("ticket resolved to {v}, expected {want}")),
            None => return Err("ticket never resolved".into()),
        }
    }
    if group.double_resolutions() != 0 {
        return Err(format!("{} tickets resolved twice", group.double_resolutions()));
    }
    let stats = group.take_stats();
    if stats.evaluated != accepted.len() as u64 {
        return Err(format!("{} items evaluated for {} accepted tickets", stats.evaluated, accepted.len()));
    }
    if stats.max_batch > batch_size {
        return Err(format!("batch of {} exceeds B = {batch_size}", stats.max_batch));
    }
    Ok(Tally { submitted: accepted.len() as u64, rejected: rejected.into_inner().unwrap() })
}
