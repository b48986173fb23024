use alloc::string::String;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{Action, Domain};

/// A start/goal pair plus how it was produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance<S> {
    pub start: S,
    pub goal: S,
    pub label: String,
    /// Length of the generating random walk, when there was one.
    pub walk_length: Option<usize>,
    pub seed: Option<u64>,
}

impl<S> Instance<S> {
    pub fn new(start: S, goal: S, label: impl Into<String>) -> Self {
        Self { start, goal, label: label.into(), walk_length: None, seed: None }
    }
}

/// Walks `length` random moves away from `goal`, never immediately undoing
/// the previous move. The walk length bounds the optimal cost from above.
pub fn random_walk_instance<D: Domain>(
    domain: &D,
    goal: &D::State,
    length: usize,
    seed: u64,
) -> Instance<D::State> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = goal.clone();
    let mut last: Option<Action> = None;
    for _ in 0..length {
        let actions = domain.actions(&state, last, true);
        let a = actions[rng.random_range(0..actions.len())];
        state = domain.apply(&state, a).expect("actions() only yields legal moves");
        last = Some(a);
    }
    Instance {
        start: state,
        goal: goal.clone(),
        label: alloc::format!("walk{length}-seed{seed}"),
        walk_length: Some(length),
        seed: Some(seed),
    }
}
