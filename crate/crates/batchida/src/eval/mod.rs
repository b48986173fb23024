//! Batched heuristic evaluation: per-evaluator batch buffers, one agent
//! thread per evaluator that flushes them, and write-once tickets through
//! which searchers read the results.
//!
//! A buffer is flushed when it reaches the batch size, when the timeout
//! started by its first insertion expires, or, with `flush_on_stall`, as
//! soon as every searcher routed to it is waiting on results. A full buffer
//! is sealed and replaced by a fresh one immediately, so submitting never
//! waits for an evaluation in flight.

mod backend;
mod ticket;

use std::collections::VecDeque;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::thread;
use std::time::{Duration, Instant};

use batchida_core::{Cost, FeatureVector, SearchError, SearchStats};

pub use backend::{BatchEvaluator, Latency, LinearModel, TableSim};
pub use ticket::Ticket;
use ticket::Slot;

/// When buffers are flushed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BatchPolicy {
    /// Target batch size B; a buffer holding B items is flushed at once.
    pub batch_size: usize,
    /// Age of the oldest buffered item that forces a partial flush.
    /// `None` disables the timeout.
    pub timeout: Option<Duration>,
    /// Flush a partial buffer as soon as every searcher routed to its
    /// evaluator is blocked waiting for results.
    pub flush_on_stall: bool,
}

impl BatchPolicy {
    pub const DEFAULT_TIMEOUT: Duration = Duration::from_millis(2);

    pub fn new(batch_size: usize) -> Self {
        Self { batch_size, timeout: Some(Self::DEFAULT_TIMEOUT), flush_on_stall: true }
    }

    fn validate(&self) -> Result<(), SearchError> {
        if self.batch_size == 0 {
            return Err(invalid("batch size must be at least 1"));
        }
        Ok(())
    }
}

fn invalid(msg: &str) -> SearchError {
    SearchError::State(batchida_core::StateError::Invalid(msg.to_string()))
}

type Item = (Arc<Slot>, FeatureVector);

#[derive(Debug, Default)]
struct Buffers {
    open: Vec<Item>,
    opened_at: Option<Instant>,
    sealed: VecDeque<Vec<Item>>,
    running: bool,
    shutdown: bool,
    /// Searchers currently routed here, and how many of them are waiting.
    active: usize,
    stalled: usize,
    stats: SearchStats,
}

impl Buffers {
    fn seal(&mut self) {
        if !self.open.is_empty() {
            let batch = std::mem::take(&mut self.open);
            self.sealed.push_back(batch);
            self.opened_at = None;
        }
    }
}

#[derive(Debug)]
struct Evaluator {
    backend: Arc<dyn BatchEvaluator>,
    buffers: Mutex<Buffers>,
    /// Wakes the agent: new items, a sealed batch, stalls, shutdown.
    agent_cv: Condvar,
    /// Wakes searchers after a batch has been resolved.
    results_cv: Condvar,
    epoch: AtomicU64,
}

impl Evaluator {
    fn lock(&self) -> MutexGuard<'_, Buffers> {
        self.buffers.lock().unwrap_or_else(|e| e.into_inner())
    }
}

/// A set of evaluators with a fixed, balanced routing of search threads.
#[derive(Debug)]
pub struct EvaluatorGroup {
    evaluators: Vec<Evaluator>,
    assignment: Vec<usize>,
    policy: BatchPolicy,
    immediate: bool,
    double_resolutions: AtomicU64,
    direct_calls: AtomicU64,
    direct_evaluated: AtomicU64,
}

impl EvaluatorGroup {
    /// One evaluator per backend; thread `i` is routed to evaluator
    /// `i mod E`, which splits the threads into groups differing by at most
    /// one.
    pub fn new(backends: Vec<Arc<dyn BatchEvaluator>>, threads: usize, policy: BatchPolicy) -> Result<Self, SearchError> {
        policy.validate()?;
        if backends.is_empty() {
            return Err(invalid("at least one evaluator is required"));
        }
        if threads < backends.len() {
            return Err(invalid("more evaluators than search threads"));
        }
        if policy.timeout.is_none() && !policy.flush_on_stall {
            return Err(invalid("a buffer needs a timeout or stall flushing to make progress"));
        }
        Ok(Self::build(backends, threads, policy, false))
    }

    /// A group whose submissions are evaluated on the spot: tickets come
    /// back already resolved and no agents run.
    pub fn immediate(backend: Arc<dyn BatchEvaluator>, threads: usize) -> Self {
        Self::build(vec![backend], threads.max(1), BatchPolicy::new(1), true)
    }

    fn build(backends: Vec<Arc<dyn BatchEvaluator>>, threads: usize, policy: BatchPolicy, immediate: bool) -> Self {
        let e = backends.len();
        let evaluators = backends
            .into_iter()
            .map(|backend| Evaluator {
                backend,
                buffers: Mutex::new(Buffers::default()),
                agent_cv: Condvar::new(),
                results_cv: Condvar::new(),
                epoch: AtomicU64::new(0),
            })
            .collect();
        Self {
            evaluators,
            assignment: (0..threads).map(|t| t % e).collect(),
            policy,
            immediate,
            double_resolutions: AtomicU64::new(0),
            direct_calls: AtomicU64::new(0),
            direct_evaluated: AtomicU64::new(0),
        }
    }

    pub fn policy(&self) -> BatchPolicy {
        self.policy
    }

    pub fn is_immediate(&self) -> bool {
        self.immediate
    }

    pub fn threads(&self) -> usize {
        self.assignment.len()
    }

    pub fn evaluator_count(&self) -> usize {
        self.evaluators.len()
    }

    pub fn evaluator_of(&self, thread: usize) -> usize {
        self.assignment[thread]
    }

    /// Number of threads routed to each evaluator.
    pub fn assignment_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.evaluators.len()];
        for &e in &self.assignment {
            sizes[e] += 1;
        }
        sizes
    }

    /// Tickets that an agent tried to resolve a second time. Always zero
    /// unless something is badly wrong.
    pub fn double_resolutions(&self) -> u64 {
        self.double_resolutions.load(Ordering::Relaxed)
    }

    fn of(&self, thread: usize) -> &Evaluator {
        &self.evaluators[self.assignment[thread]]
    }

    /// Queues `features` on the buffer of `thread`'s evaluator.
    pub fn submit(&self, thread: usize, features: FeatureVector) -> Result<Ticket, SearchError> {
        let mut out = Vec::with_capacity(1);
        self.submit_all(thread, [features], &mut out)?;
        Ok(out.pop().expect("one ticket per submission"))
    }

    /// Queues a group of items under one lock, so siblings land in the
    /// same batch unless it fills up midway. Tickets are appended to `out`
    /// in order.
    pub fn submit_all(
        &self,
        thread: usize,
        features: impl IntoIterator<Item = FeatureVector>,
        out: &mut impl Extend<Ticket>,
    ) -> Result<(), SearchError> {
        let ev = self.of(thread);
        if self.immediate {
            let batch: Vec<FeatureVector> = features.into_iter().collect();
            let mut values = Vec::with_capacity(batch.len());
            ev.backend.evaluate(&batch, &mut values);
            out.extend(values.into_iter().map(Ticket::ready));
            return Ok(());
        }
        let mut buf = ev.lock();
        if !buf.running || buf.shutdown {
            return Err(SearchError::EvaluatorClosed);
        }
        let mut wake = false;
        for fv in features {
            let slot = Slot::new();
            if buf.open.is_empty() {
                buf.opened_at = Some(Instant::now());
                wake = true;
            }
            buf.open.push((slot.clone(), fv));
            if buf.open.len() >= self.policy.batch_size {
                buf.seal();
                wake = true;
            }
            out.extend([Ticket::pending(slot)]);
        }
        if wake {
            ev.agent_cv.notify_one();
        }
        Ok(())
    }

    /// Seals every nonempty buffer for immediate processing.
    pub fn flush(&self) {
        for ev in &self.evaluators {
            let mut buf = ev.lock();
            if buf.running {
                buf.seal();
                ev.agent_cv.notify_one();
            }
        }
    }

    /// Synchronous evaluation of a single state, used for the search root.
    pub fn evaluate_single(&self, features: &FeatureVector) -> Cost {
        self.evaluate_direct(std::slice::from_ref(features))[0]
    }

    /// Synchronous evaluation on the calling thread, in calls of at most
    /// the batch size. Counted separately from buffered batches.
    pub fn evaluate_direct(&self, batch: &[FeatureVector]) -> Vec<Cost> {
        let backend = &self.evaluators[0].backend;
        let mut out = Vec::with_capacity(batch.len());
        for chunk in batch.chunks(self.policy.batch_size) {
            backend.evaluate(chunk, &mut out);
            self.direct_calls.fetch_add(1, Ordering::Relaxed);
            self.direct_evaluated.fetch_add(chunk.len() as u64, Ordering::Relaxed);
        }
        out
    }

    /// Runs `body` with one agent thread per evaluator. When `body`
    /// returns (or panics) the group shuts down: every buffered item is
    /// still evaluated and resolved before the agents exit, and later
    /// submissions fail until the next call.
    pub fn run<R>(&self, body: impl FnOnce() -> R) -> R {
        if self.immediate {
            return body();
        }
        for ev in &self.evaluators {
            let mut buf = ev.lock();
            buf.running = true;
            buf.shutdown = false;
            buf.active = 0;
            buf.stalled = 0;
        }
        thread::scope(|scope| {
            for ev in &self.evaluators {
                scope.spawn(move || self.agent(ev));
            }
            let _guard = ShutdownOnDrop(self);
            body()
        })
    }

    /// Stops accepting submissions; agents drain what is buffered.
    pub fn shutdown(&self) {
        for ev in &self.evaluators {
            let mut buf = ev.lock();
            buf.shutdown = true;
            ev.agent_cv.notify_all();
        }
    }

    fn agent(&self, ev: &Evaluator) {
        let mut out = Vec::new();
        let mut buf = ev.lock();
        loop {
            let batch = loop {
                if let Some(batch) = buf.sealed.pop_front() {
                    break Some(batch);
                }
                if buf.open.is_empty() {
                    if buf.shutdown {
                        break None;
                    }
                    buf = ev.agent_cv.wait(buf).unwrap_or_else(|e| e.into_inner());
                    continue;
                }
                let now = Instant::now();
                let deadline = self.policy.timeout.map(|t| buf.opened_at.unwrap_or(now) + t);
                let stalled = self.policy.flush_on_stall && buf.active > 0 && buf.stalled >= buf.active;
                if buf.shutdown || stalled || deadline.is_some_and(|d| now >= d) {
                    buf.seal();
                    continue;
                }
                buf = match deadline {
                    Some(d) => ev.agent_cv.wait_timeout(buf, d - now).unwrap_or_else(|e| e.into_inner()).0,
                    None => ev.agent_cv.wait(buf).unwrap_or_else(|e| e.into_inner()),
                };
            };
            let Some(batch) = batch else { break };
            drop(buf);

            let features: Vec<FeatureVector> = batch.iter().map(|(_, f)| f.clone()).collect();
            out.clear();
            ev.backend.evaluate(&features, &mut out);
            assert_eq!(out.len(), batch.len(), "backend returned a value per item");
            for ((slot, _), &v) in batch.iter().zip(&out) {
                if !slot.resolve(v) {
                    self.double_resolutions.fetch_add(1, Ordering::Relaxed);
                }
            }

            buf = ev.lock();
            buf.stats.record_batch(batch.len());
            ev.epoch.fetch_add(1, Ordering::Release);
            ev.results_cv.notify_all();
        }
        buf.running = false;
        ev.results_cv.notify_all();
    }

    /// Marks `thread` as a live searcher on its evaluator.
    pub fn register(&self, thread: usize) {
        if self.immediate {
            return;
        }
        let ev = self.of(thread);
        ev.lock().active += 1;
    }

    pub fn deregister(&self, thread: usize) {
        if self.immediate {
            return;
        }
        let ev = self.of(thread);
        let mut buf = ev.lock();
        buf.active = buf.active.saturating_sub(1);
        ev.agent_cv.notify_one();
    }

    /// Count of batches resolved so far by `thread`'s evaluator.
    pub fn epoch(&self, thread: usize) -> u64 {
        self.of(thread).epoch.load(Ordering::Acquire)
    }

    /// Blocks `thread` until its evaluator resolves another batch after
    /// `seen`, or `max_wait` passes. While blocked the thread counts as
    /// stalled for `flush_on_stall`.
    pub fn wait_for_progress(&self, thread: usize, seen: u64, max_wait: Duration) {
        if self.immediate {
            return;
        }
        let ev = self.of(thread);
        let deadline = Instant::now() + max_wait;
        let mut buf = ev.lock();
        if ev.epoch.load(Ordering::Acquire) != seen || !buf.running {
            return;
        }
        buf.stalled += 1;
        ev.agent_cv.notify_one();
        loop {
            let now = Instant::now();
            if ev.epoch.load(Ordering::Acquire) != seen || now >= deadline || !buf.running {
                break;
            }
            buf = ev.results_cv.wait_timeout(buf, deadline - now).unwrap_or_else(|e| e.into_inner()).0;
        }
        buf.stalled -= 1;
    }

    /// Blocks until `ticket` resolves.
    pub fn wait(&self, thread: usize, ticket: &Ticket) -> Result<Cost, SearchError> {
        loop {
            let seen = self.epoch(thread);
            if let Some(v) = ticket.poll() {
                return Ok(v);
            }
            if self.immediate || !self.of(thread).lock().running {
                return ticket.poll().ok_or(SearchError::EvaluatorClosed);
            }
            self.wait_for_progress(thread, seen, Duration::from_millis(5));
        }
    }

    /// Batch counters accumulated since the last call, including direct
    /// evaluations.
    pub fn take_stats(&self) -> SearchStats {
        let mut total = SearchStats::default();
        for ev in &self.evaluators {
            let stats = std::mem::take(&mut ev.lock().stats);
            total.merge(&stats);
        }
        total.direct_calls = self.direct_calls.swap(0, Ordering::Relaxed);
        total.direct_evaluated = self.direct_evaluated.swap(0, Ordering::Relaxed);
        total
    }
}

struct ShutdownOnDrop<'a>(&'a EvaluatorGroup);

impl Drop for ShutdownOnDrop<'_> {
    fn drop(&mut self) {
        self.0.shutdown();
    }
}
