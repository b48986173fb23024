//! The domain abstraction shared by every search in the workspace.

use alloc::vec::Vec;
use core::fmt::Debug;
use core::hash::Hash;

use arrayvec::ArrayVec;

use crate::error::StateError;

/// Path cost and heuristic value. Both domains are unit cost.
pub type Cost = u32;

/// Opaque move identifier. Its meaning is fixed by the owning domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Action(pub u8);

pub const MAX_ACTIONS: usize = 18;

pub type ActionList = ArrayVec<Action, MAX_ACTIONS>;

/// Identifies a concrete domain in file headers and instance lines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DomainTag {
    /// N x N sliding-tile puzzle.
    Stp(u8),
    /// 3x3x3 Rubik's cube.
    Cube,
}

impl DomainTag {
    pub fn code(self) -> u8 {
        match self {
            DomainTag::Stp(n) => n,
            DomainTag::Cube => 0xC3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0xC3 => Some(DomainTag::Cube),
            2..=5 => Some(DomainTag::Stp(code)),
            _ => None,
        }
    }
}

pub const MAX_FEATURE_ENTITIES: usize = 25;

/// One-hot state encoding stored sparsely: `hot` lists the set positions of
/// a dense vector of length `len`, one per encoded entity.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FeatureVector {
    pub len: u32,
    pub hot: ArrayVec<u16, MAX_FEATURE_ENTITIES>,
}

impl FeatureVector {
    pub fn to_dense(&self) -> Vec<f32> {
        let mut dense = alloc::vec![0.0; self.len as usize];
        for &i in &self.hot {
            dense[i as usize] = 1.0;
        }
        dense
    }
}

/// A state space with unit-cost reversible actions.
pub trait Domain: Send + Sync {
    type State: Clone + Eq + Hash + Ord + Debug + Send + Sync + 'static;

    fn tag(&self) -> DomainTag;

    /// Canonical solved state.
    fn goal(&self) -> Self::State;

    fn is_valid(&self, state: &Self::State) -> bool;

    /// Whether `goal` is reachable from `start` at all (parity classes).
    fn is_solvable(&self, start: &Self::State, goal: &Self::State) -> bool;

    /// Legal actions in `state`. With `pruning`, moves that immediately
    /// return towards the parent (`last`) are left out.
    fn actions(&self, state: &Self::State, last: Option<Action>, pruning: bool) -> ActionList;

    fn inverse(&self, action: Action) -> Action;

    fn apply(&self, state: &Self::State, action: Action) -> Result<Self::State, StateError>;

    /// Recovers the predecessor of `state` given the action that produced it.
    fn undo(&self, state: &Self::State, action: Action) -> Result<Self::State, StateError> {
        self.apply(state, self.inverse(action))
    }

    /// Largest number of actions any state can have without pruning.
    fn max_branching(&self) -> usize;

    fn feature_len(&self) -> usize;

    fn encode_features(&self, state: &Self::State) -> FeatureVector;

    fn decode_features(&self, features: &FeatureVector) -> Result<Self::State, StateError>;
}

/// Domains that support pattern abstractions: ranking the placement of a
/// subset of labels, and walking the abstract space to build a PDB.
pub trait PatternSpace: Domain {
    /// Number of distinct placements of the tracked labels.
    fn abstract_size(&self, pattern: &[u8]) -> Result<u64, StateError>;

    /// Lexicographic rank of the placement of `pattern` in `state`.
    fn rank(&self, state: &Self::State, pattern: &[u8]) -> Result<u64, StateError>;

    /// A concrete representative whose tracked labels sit where `index`
    /// puts them. Untracked labels are filled in an arbitrary fixed way.
    fn unrank(&self, index: u64, pattern: &[u8]) -> Result<Self::State, StateError>;

    /// The labels the PDB builder walks over. Defaults to `pattern`; the
    /// sliding-tile puzzle adds the blank so that moves can be generated.
    fn walk_pattern(&self, pattern: &[u8]) -> Vec<u8> {
        pattern.to_vec()
    }

    /// Cost charged to the abstraction for `action` in `state` (0 or 1).
    fn abstract_cost(&self, _state: &Self::State, _action: Action, _pattern: &[u8]) -> u8 {
        1
    }

    /// Sum of grid distances for tile puzzles; `None` elsewhere.
    fn manhattan(&self, _state: &Self::State) -> Option<Cost> {
        None
    }
}

pub(crate) fn check_pattern(pattern: &[u8], labels: usize) -> Result<(), StateError> {
    if pattern.is_empty() {
        return Err(StateError::EmptyPattern);
    }
    let mut seen = [false; 32];
    for &l in pattern {
        if l as usize >= labels {
            return Err(StateError::LabelAbsent { label: l, size: labels });
        }
        if seen[l as usize] {
            return Err(StateError::DuplicateLabel(l));
        }
        seen[l as usize] = true;
    }
    Ok(())
}
