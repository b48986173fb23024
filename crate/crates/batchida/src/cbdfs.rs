//! Parallel cost-bounded DFS over a shared queue of subtree works.
//!
//! Each search thread interleaves `work_num` works round-robin. A work is
//! an explicit DFS stack: expanding a frame pushes every successor together
//! with a ticket for its heuristic, and the thread moves on to another work
//! while the top ticket is unresolved.

use std::collections::{HashSet, VecDeque};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use arrayvec::ArrayVec;
use batchida_core::domain::MAX_ACTIONS;
use batchida_core::{Action, Cost, Domain, SearchError, SearchStats};

use crate::eval::{EvaluatorGroup, Ticket};

/// Longest a thread with every slot blocked sleeps before re-checking.
const STALL_WAIT: Duration = Duration::from_millis(1);
/// Loop turns between deadline checks.
const DEADLINE_STRIDE: u64 = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WorkStatus {
    Active,
    Done,
}

#[derive(Clone, Debug)]
struct Frame<S> {
    state: S,
    g: Cost,
    ticket: Ticket,
    /// Action that generated this frame; `None` for the work root.
    action: Option<Action>,
    /// Distance from the work root.
    depth: u32,
}

/// A subtree of the global search tree: its root, the action history that
/// reaches it from the global root, and an explicit DFS stack.
#[derive(Clone, Debug)]
pub struct Work<S> {
    pub root: S,
    pub init_history: Vec<Action>,
    stack: Vec<Frame<S>>,
    /// Actions from `root` to the frame most recently expanded.
    path: Vec<Action>,
    pub status: WorkStatus,
    /// Expansions performed inside this work.
    pub expansions: u64,
}

impl<S: Clone> Work<S> {
    pub fn new(root: S, init_history: Vec<Action>) -> Self {
        Self { root, init_history, stack: Vec::new(), path: Vec::new(), status: WorkStatus::Active, expansions: 0 }
    }

    pub fn depth(&self) -> usize {
        self.init_history.len()
    }

    /// A fresh copy whose stack holds only the root, with its heuristic
    /// value already known.
    pub fn activate(&self, h: Cost) -> Self {
        let mut w = Work::new(self.root.clone(), self.init_history.clone());
        w.stack.push(Frame { state: self.root.clone(), g: self.depth() as Cost, ticket: Ticket::ready(h), action: None, depth: 0 });
        w
    }

    pub fn live_frames(&self) -> usize {
        self.stack.len()
    }
}

/// Works handed out to searchers. Each work is popped exactly once; popping
/// an empty queue returns `None` immediately.
#[derive(Debug, Default)]
pub struct WorkQueue<S> {
    pending: Mutex<VecDeque<Work<S>>>,
    closed: AtomicBool,
}

impl<S> WorkQueue<S> {
    pub fn new(works: impl IntoIterator<Item = Work<S>>) -> Self {
        Self { pending: Mutex::new(works.into_iter().collect()), closed: AtomicBool::new(false) }
    }

    pub fn pop(&self) -> Option<Work<S>> {
        if self.closed.load(Ordering::Acquire) {
            return None;
        }
        self.pending.lock().unwrap_or_else(|e| e.into_inner()).pop_front()
    }

    pub fn len(&self) -> usize {
        self.pending.lock().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Makes every further pop return `None`.
    pub fn close(&self) {
        self.closed.store(true, Ordering::Release);
    }
}

/// Smallest f-value seen above the bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BoundCollector {
    min: Option<Cost>,
}

impl BoundCollector {
    pub fn record(&mut self, f: Cost) {
        self.min = Some(self.min.map_or(f, |m| m.min(f)));
    }

    pub fn min(&self) -> Option<Cost> {
        self.min
    }

    pub fn merge(&mut self, other: &BoundCollector) {
        if let Some(f) = other.min {
            self.record(f);
        }
    }

    pub fn reduce<'a>(collectors: impl IntoIterator<Item = &'a BoundCollector>) -> BoundCollector {
        let mut out = BoundCollector::default();
        for c in collectors {
            out.merge(c);
        }
        out
    }
}

/// The next bound after an iteration that found no solution.
pub fn update_threshold(collector: &BoundCollector, bound: Cost) -> Result<Cost, SearchError> {
    let next = collector.min().ok_or(SearchError::Exhausted)?;
    assert!(next > bound, "threshold must strictly increase ({next} after {bound})");
    Ok(next)
}

/// Raise-once signal shared by all searchers.
#[derive(Debug, Default)]
pub struct StopFlag(AtomicBool);

impl StopFlag {
    pub fn raise(&self) {
        self.0.store(true, Ordering::Release);
    }

    pub fn is_raised(&self) -> bool {
        self.0.load(Ordering::Acquire)
    }
}

/// Best solution found so far: lowest cost wins, the earlier one on ties.
#[derive(Debug, Default)]
pub struct SolutionSlot(Mutex<Option<Vec<Action>>>);

impl SolutionSlot {
    pub fn offer(&self, path: Vec<Action>) {
        let mut best = self.0.lock().unwrap_or_else(|e| e.into_inner());
        if best.as_ref().is_none_or(|b| path.len() < b.len()) {
            *best = Some(path);
        }
    }

    pub fn take(&self) -> Option<Vec<Action>> {
        self.0.lock().unwrap_or_else(|e| e.into_inner()).take()
    }
}

/// Everything a searcher thread shares with its siblings.
#[derive(Debug)]
pub struct Shared<'a, S> {
    pub queue: &'a WorkQueue<S>,
    pub group: &'a EvaluatorGroup,
    pub stop: &'a StopFlag,
    pub solution: &'a SolutionSlot,
    pub deadline: Option<Instant>,
    /// Set when a searcher stopped because the deadline passed.
    pub timed_out: &'a AtomicBool,
}

/// Per-thread search parameters.
#[derive(Debug)]
pub struct ThreadCtx<'a, D: Domain> {
    pub domain: &'a D,
    pub goal: &'a D::State,
    pub thread_id: usize,
    pub work_num: usize,
    pub pruning: bool,
    /// Panic on a violated search invariant instead of only counting it.
    pub strict: bool,
    /// Keep every expanded state in the report.
    pub trace: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThreadStatus {
    /// Every slot ran out of work.
    Finished,
    /// The stop flag was raised.
    Stopped,
    BudgetExhausted,
}

#[derive(Clone, Debug)]
pub struct ThreadReport<S> {
    pub status: ThreadStatus,
    pub collector: BoundCollector,
    /// `expanded`, `generated`, `peak_live_frames` and violation counters.
    pub stats: SearchStats,
    pub works_done: u64,
    /// Sum of per-work expansion counts over the works this thread finished.
    pub work_expansions: u64,
    pub expanded_states: Vec<S>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    /// One frame was expanded.
    Progressed,
    /// The top frame's heuristic is not available yet.
    Blocked,
    /// The stack is empty, or a goal was found.
    Done,
}

/// Advances `work` by at most one expansion. Frames on top whose
/// f = g + h exceeds `bound` are popped first and recorded in `collector`.
#[allow(clippy::too_many_arguments)]
pub fn do_iteration<D: Domain>(
    work: &mut Work<D::State>,
    bound: Cost,
    ctx: &ThreadCtx<'_, D>,
    group: &EvaluatorGroup,
    collector: &mut BoundCollector,
    stats: &mut SearchStats,
    shared_solution: &SolutionSlot,
    stop: &StopFlag,
    trace: &mut Vec<D::State>,
) -> Result<Step, SearchError> {
    loop {
        let Some(top) = work.stack.last() else {
            work.status = WorkStatus::Done;
            return Ok(Step::Done);
        };
        let Some(h) = top.ticket.poll() else {
            return Ok(Step::Blocked);
        };
        let frame = work.stack.pop().expect("stack has a top frame");
        if frame.ticket.poll() != Some(h) {
            violation(&mut stats.completeness_violations, ctx.strict, "frame handled without a settled heuristic");
        }
        let f = frame.g + h;
        if f > bound {
            collector.record(f);
            continue;
        }
        if frame.g + h > bound {
            violation(&mut stats.alignment_violations, ctx.strict, "expanding a frame above the bound");
        }

        let depth = frame.depth as usize;
        if depth > 0 {
            work.path.truncate(depth - 1);
            work.path.push(frame.action.expect("non-root frames carry their action"));
        } else {
            work.path.clear();
            if &frame.state == ctx.goal {
                return Ok(solved(work, Vec::new(), shared_solution, stop));
            }
        }
        debug_assert_eq!(work.path.len(), depth);
        debug_assert_eq!(frame.g as usize, work.init_history.len() + depth);

        stats.expanded += 1;
        work.expansions += 1;
        if ctx.trace {
            trace.push(frame.state.clone());
        }
        let last = if depth == 0 { work.init_history.last().copied() } else { frame.action };
        let mut children: ArrayVec<(Action, D::State), MAX_ACTIONS> = ArrayVec::new();
        for a in ctx.domain.actions(&frame.state, last, ctx.pruning) {
            let child = ctx.domain.apply(&frame.state, a)?;
            stats.generated += 1;
            if &child == ctx.goal && frame.g < bound {
                let tail = vec![a];
                return Ok(solved(work, tail, shared_solution, stop));
            }
            children.push((a, child));
        }
        let mut tickets: ArrayVec<Ticket, MAX_ACTIONS> = ArrayVec::new();
        group.submit_all(ctx.thread_id, children.iter().map(|(_, c)| ctx.domain.encode_features(c)), &mut tickets)?;
        for ((a, child), ticket) in children.into_iter().zip(tickets).rev() {
            work.stack.push(Frame { state: child, g: frame.g + 1, ticket, action: Some(a), depth: frame.depth + 1 });
        }
        return Ok(Step::Progressed);
    }
}

fn solved<S>(work: &mut Work<S>, tail: Vec<Action>, slot: &SolutionSlot, stop: &StopFlag) -> Step {
    let mut path = work.init_history.clone();
    path.extend_from_slice(&work.path);
    path.extend(tail);
    slot.offer(path);
    stop.raise();
    work.stack.clear();
    work.status = WorkStatus::Done;
    Step::Done
}

fn violation(counter: &mut u64, strict: bool, what: &str) {
    *counter += 1;
    if strict {
        panic!("search invariant violated: {what}");
    }
}

/// One searcher: fills `work_num` slots from the queue and round-robins
/// over them until every slot has run dry, the stop flag is raised, or
/// `budget` expansions have been spent.
pub fn cb_dfs<D: Domain>(
    ctx: &ThreadCtx<'_, D>,
    bound: Cost,
    shared: &Shared<'_, D::State>,
    budget: Option<u64>,
) -> Result<ThreadReport<D::State>, SearchError> {
    let group = shared.group;
    let tid = ctx.thread_id;
    let k = ctx.work_num.max(1);
    let mut report = ThreadReport {
        status: ThreadStatus::Finished,
        collector: BoundCollector::default(),
        stats: SearchStats::default(),
        works_done: 0,
        work_expansions: 0,
        expanded_states: Vec::new(),
    };
    if shared.stop.is_raised() {
        report.status = ThreadStatus::Stopped;
        return Ok(report);
    }

    group.register(tid);
    let result = run_slots(ctx, bound, shared, budget, k, &mut report);
    group.deregister(tid);
    result.map(|()| report)
}

fn run_slots<D: Domain>(
    ctx: &ThreadCtx<'_, D>,
    bound: Cost,
    shared: &Shared<'_, D::State>,
    budget: Option<u64>,
    k: usize,
    report: &mut ThreadReport<D::State>,
) -> Result<(), SearchError> {
    let group = shared.group;
    let tid = ctx.thread_id;
    let mut slots: Vec<Option<Work<D::State>>> = (0..k).map(|_| shared.queue.pop()).collect();
    let mut miss = slots.iter().filter(|s| s.is_none()).count();
    let mut live: usize = slots.iter().flatten().map(Work::live_frames).sum();
    report.stats.peak_live_frames = live;
    let mut counter = 0;
    let mut blocked_run = 0;
    let mut epoch = group.epoch(tid);
    let mut turns: u64 = 0;

    loop {
        if shared.stop.is_raised() {
            report.status = ThreadStatus::Stopped;
            return Ok(());
        }
        if miss == k {
            report.status = ThreadStatus::Finished;
            return Ok(());
        }
        if budget.is_some_and(|b| report.stats.expanded >= b) {
            report.status = ThreadStatus::BudgetExhausted;
            return Ok(());
        }
        turns += 1;
        if turns.is_multiple_of(DEADLINE_STRIDE) && shared.deadline.is_some_and(|d| Instant::now() >= d) {
            shared.timed_out.store(true, Ordering::Release);
            shared.stop.raise();
            continue;
        }

        if let Some(work) = slots[counter].as_mut() {
            if blocked_run == 0 {
                epoch = group.epoch(tid);
            }
            let before = work.live_frames();
            let step = do_iteration(
                work,
                bound,
                ctx,
                group,
                &mut report.collector,
                &mut report.stats,
                shared.solution,
                shared.stop,
                &mut report.expanded_states,
            )?;
            live = live + work.live_frames() - before;
            report.stats.peak_live_frames = report.stats.peak_live_frames.max(live);
            match step {
                Step::Done => {
                    report.works_done += 1;
                    report.work_expansions += work.expansions;
                    live -= work.live_frames();
                    slots[counter] = shared.queue.pop();
                    match &slots[counter] {
                        Some(w) => live += w.live_frames(),
                        None => miss += 1,
                    }
                    report.stats.peak_live_frames = report.stats.peak_live_frames.max(live);
                    blocked_run = 0;
                }
                Step::Progressed => blocked_run = 0,
                Step::Blocked => blocked_run += 1,
            }
        }
        counter = (counter + 1) % k;

        if blocked_run > 0 && blocked_run >= k - miss {
            group.wait_for_progress(tid, epoch, STALL_WAIT);
            blocked_run = 0;
        }
    }
}

/// A node of the tree enumerated down to `d_init` before the parallel
/// phase. Nodes are stored in DFS preorder, so parents precede children.
#[derive(Clone, Debug)]
pub struct GenNode<S> {
    pub state: S,
    pub parent: Option<usize>,
    pub action: Option<Action>,
    pub depth: usize,
}

/// The enumerated top of the search tree together with the deduplicated
/// works hanging off its leaves.
#[derive(Clone, Debug)]
pub struct Frontier<S> {
    pub d_init: usize,
    pub nodes: Vec<GenNode<S>>,
    pub works: Vec<Work<S>>,
    /// For each work, the leaves of `nodes` holding its root state.
    pub leaves: Vec<Vec<usize>>,
}

impl<S: Clone + Eq + std::hash::Hash> Frontier<S> {
    pub fn build<D: Domain<State = S>>(domain: &D, start: &S, d_init: usize, pruning: bool) -> Result<Self, SearchError> {
        let mut nodes = vec![GenNode { state: start.clone(), parent: None, action: None, depth: 0 }];
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if nodes[i].depth == d_init {
                continue;
            }
            let node = nodes[i].clone();
            let mut kids = Vec::new();
            for a in domain.actions(&node.state, node.action, pruning) {
                let child = domain.apply(&node.state, a)?;
                kids.push(nodes.len());
                nodes.push(GenNode { state: child, parent: Some(i), action: Some(a), depth: node.depth + 1 });
            }
            stack.extend(kids.into_iter().rev());
        }
        // `nodes` is in generation order; reorder to preorder so that leaf
        // order matches the sequential search's visiting order.
        let nodes = preorder(nodes);

        let mut works = Vec::new();
        let mut leaves: Vec<Vec<usize>> = Vec::new();
        let mut index: std::collections::HashMap<S, usize> = std::collections::HashMap::new();
        for (i, n) in nodes.iter().enumerate().filter(|(_, n)| n.depth == d_init) {
            match index.get(&n.state) {
                Some(&w) => leaves[w].push(i),
                None => {
                    index.insert(n.state.clone(), works.len());
                    works.push(Work::new(n.state.clone(), history(&nodes, i)));
                    leaves.push(vec![i]);
                }
            }
        }
        if works.is_empty() {
            return Err(SearchError::NoWork(d_init));
        }
        Ok(Self { d_init, nodes, works, leaves })
    }

    pub fn history(&self, node: usize) -> Vec<Action> {
        history(&self.nodes, node)
    }
}

fn history<S>(nodes: &[GenNode<S>], mut i: usize) -> Vec<Action> {
    let mut h = Vec::with_capacity(nodes[i].depth);
    while let (Some(p), Some(a)) = (nodes[i].parent, nodes[i].action) {
        h.push(a);
        i = p;
    }
    h.reverse();
    h
}

fn preorder<S: Clone>(nodes: Vec<GenNode<S>>) -> Vec<GenNode<S>> {
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for (i, n) in nodes.iter().enumerate() {
        if let Some(p) = n.parent {
            children[p].push(i);
        }
    }
    let mut order = Vec::with_capacity(nodes.len());
    let mut new_index = vec![0; nodes.len()];
    let mut stack = vec![0usize];
    while let Some(i) = stack.pop() {
        new_index[i] = order.len();
        order.push(i);
        stack.extend(children[i].iter().rev());
    }
    order
        .into_iter()
        .map(|i| {
            let mut n = nodes[i].clone();
            n.parent = n.parent.map(|p| new_index[p]);
            n
        })
        .collect()
}

/// Enumerates every action history of length `d_init` from `start` and
/// returns one work per distinct leaf state.
pub fn generate_work<D: Domain>(domain: &D, start: &D::State, d_init: usize, pruning: bool) -> Result<Vec<Work<D::State>>, SearchError> {
    Ok(Frontier::build(domain, start, d_init, pruning)?.works)
}

/// Keeps the first work for each distinct root state.
pub fn dedup_frontier<S: Clone + Eq + std::hash::Hash>(works: Vec<Work<S>>) -> Vec<Work<S>> {
    let mut seen = HashSet::new();
    works.into_iter().filter(|w| seen.insert(w.root.clone())).collect()
}

/// Smallest depth whose deduplicated frontier holds at least `target`
/// works, capped at `max_depth`.
pub fn auto_d_init<D: Domain>(domain: &D, start: &D::State, pruning: bool, target: usize, max_depth: usize) -> usize {
    for d in 0..max_depth {
        if Frontier::build(domain, start, d, pruning).map_or(0, |f| f.works.len()) >= target {
            return d;
        }
    }
    max_depth
}

/// Outcome of walking the enumerated tree top at one bound.
#[derive(Debug)]
pub struct Gate<S> {
    /// Works whose root is reached through ancestors within the bound and
    /// whose own f is within it, ready to be queued.
    pub active: Vec<Work<S>>,
    pub collector: BoundCollector,
    pub expanded: u64,
    pub generated: u64,
    /// A goal inside the enumerated tree top, as an action history.
    pub solution: Option<Vec<Action>>,
    pub expanded_states: Vec<S>,
}

impl<S: Clone + Eq + std::hash::Hash> Frontier<S> {
    /// Replays the sequential search over the enumerated nodes at `bound`:
    /// `h` holds the heuristic of every node. Interior nodes above the
    /// bound are pruned there, so their subtrees' works stay inactive.
    pub fn gate(&self, bound: Cost, h: &[Cost], goal: &S, trace: bool) -> Gate<S> {
        let n = self.nodes.len();
        let mut reached = vec![false; n];
        let mut open = vec![false; n];
        let mut gate = Gate {
            active: Vec::new(),
            collector: BoundCollector::default(),
            expanded: 0,
            generated: 0,
            solution: None,
            expanded_states: Vec::new(),
        };
        let mut children = vec![0u64; n];
        for node in &self.nodes {
            if let Some(p) = node.parent {
                children[p] += 1;
            }
        }
        for (i, node) in self.nodes.iter().enumerate() {
            reached[i] = node.parent.is_none_or(|p| reached[p] && open[p]);
            if !reached[i] || node.depth == self.d_init {
                continue;
            }
            let f = node.depth as Cost + h[i];
            if f > bound {
                gate.collector.record(f);
                continue;
            }
            if &node.state == goal {
                gate.solution = Some(self.history(i));
                return gate;
            }
            open[i] = true;
            gate.expanded += 1;
            gate.generated += children[i];
            if trace {
                gate.expanded_states.push(node.state.clone());
            }
        }
        for (w, leaves) in self.works.iter().zip(&self.leaves) {
            if !leaves.iter().any(|&l| reached[l]) {
                continue;
            }
            let hw = h[leaves[0]];
            let f = self.d_init as Cost + hw;
            if f > bound {
                gate.collector.record(f);
            } else {
                gate.active.push(w.activate(hw));
            }
        }
        gate
    }
}
