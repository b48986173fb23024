//! Textbook sequential IDA*, the reference for threshold sequences and
//! expansion sets of the parallel searches.

use alloc::vec::Vec;
use core::ops::ControlFlow;

use crate::domain::{Action, Cost, Domain, PatternSpace};
use crate::error::SearchError;
use crate::heuristics::HeuristicSource;
use crate::instance::Instance;
use crate::metrics::{IterationStats, SearchStats};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IdaOptions {
    /// Skip moves that undo the previous move (tile) or re-turn the same
    /// face (cube).
    pub pruning: bool,
    /// Give up with [`SearchError::Interrupted`] once the bound passes this.
    pub max_bound: Option<Cost>,
}

impl Default for IdaOptions {
    fn default() -> Self {
        Self { pruning: true, max_bound: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchResult {
    pub solution: Vec<Action>,
    pub cost: Cost,
    pub stats: SearchStats,
    pub threshold_history: Vec<Cost>,
}

impl SearchResult {
    /// Replays the solution from `start` and checks it ends at `goal`.
    pub fn verify<D: Domain>(&self, domain: &D, start: &D::State, goal: &D::State) -> bool {
        let mut s = start.clone();
        for &a in &self.solution {
            match domain.apply(&s, a) {
                Ok(next) => s = next,
                Err(_) => return false,
            }
        }
        &s == goal && self.solution.len() as Cost == self.cost
    }
}

pub fn idastar<D: PatternSpace>(
    domain: &D,
    instance: &Instance<D::State>,
    source: &HeuristicSource,
    opts: IdaOptions,
) -> Result<SearchResult, SearchError> {
    idastar_by(domain, &instance.start, &instance.goal, |s| source.lookup(domain, s), opts, |_, _| ControlFlow::Continue(()))
}

/// IDA* with an arbitrary heuristic closure. `on_expand(state, bound)` is
/// called for every expanded node; breaking out of it abandons the search
/// with [`SearchError::Interrupted`].
pub fn idastar_by<D, H, V>(
    domain: &D,
    start: &D::State,
    goal: &D::State,
    heuristic: H,
    opts: IdaOptions,
    on_expand: V,
) -> Result<SearchResult, SearchError>
where
    D: Domain,
    H: FnMut(&D::State) -> Cost,
    V: FnMut(&D::State, Cost) -> ControlFlow<()>,
{
    if !domain.is_solvable(start, goal) {
        return Err(SearchError::Exhausted);
    }
    let mut search = Ida { domain, goal, heuristic, on_expand, opts, bound: 0, iter: IterationStats::default() };
    let mut result = SearchResult::default();
    let mut bound = (search.heuristic)(start);
    let mut path = Vec::new();
    loop {
        if opts.max_bound.is_some_and(|m| bound > m) {
            return Err(SearchError::Interrupted);
        }
        result.threshold_history.push(bound);
        search.bound = bound;
        search.iter = IterationStats { threshold: bound, ..Default::default() };
        let outcome = search.visit(start, 0, None, &mut path);
        result.stats.expanded += search.iter.expanded;
        result.stats.generated += search.iter.generated;
        result.stats.iterations.push(core::mem::take(&mut search.iter));
        match outcome {
            Visit::Found => {
                result.cost = path.len() as Cost;
                result.solution = path;
                return Ok(result);
            }
            Visit::Exceeded(Some(next)) => bound = next,
            Visit::Exceeded(None) => return Err(SearchError::Exhausted),
            Visit::Aborted => return Err(SearchError::Interrupted),
        }
    }
}

enum Visit {
    Found,
    Aborted,
    Exceeded(Option<Cost>),
}

struct Ida<'a, D: Domain, H, V> {
    domain: &'a D,
    goal: &'a D::State,
    heuristic: H,
    on_expand: V,
    opts: IdaOptions,
    bound: Cost,
    iter: IterationStats,
}

impl<D, H, V> Ida<'_, D, H, V>
where
    D: Domain,
    H: FnMut(&D::State) -> Cost,
    V: FnMut(&D::State, Cost) -> ControlFlow<()>,
{
    fn visit(&mut self, state: &D::State, g: Cost, last: Option<Action>, path: &mut Vec<Action>) -> Visit {
        let f = g + (self.heuristic)(state);
        if f > self.bound {
            return Visit::Exceeded(Some(f));
        }
        if state == self.goal {
            return Visit::Found;
        }
        self.iter.expanded += 1;
        if (self.on_expand)(state, self.bound).is_break() {
            return Visit::Aborted;
        }
        let mut min: Option<Cost> = None;
        for a in self.domain.actions(state, last, self.opts.pruning) {
            self.iter.generated += 1;
            let child = self.domain.apply(state, a).expect("actions() only yields legal moves");
            path.push(a);
            match self.visit(&child, g + 1, Some(a), path) {
                Visit::Found => return Visit::Found,
                Visit::Aborted => return Visit::Aborted,
                Visit::Exceeded(Some(m)) => min = Some(min.map_or(m, |x| x.min(m))),
                Visit::Exceeded(None) => {}
            }
            path.pop();
        }
        Visit::Exceeded(min)
    }
}
