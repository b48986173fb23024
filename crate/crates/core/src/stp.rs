//! The N x N sliding-tile puzzle.
//!
//! Cells are numbered row-major. Label 0 is the blank; the canonical goal
//! puts label `i` in cell `i`. Actions move the blank: 0 up, 1 down,
//! 2 left, 3 right, so `a ^ 1` is the inverse of `a`.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use crate::domain::{check_pattern, Action, ActionList, Cost, Domain, DomainTag, FeatureVector, PatternSpace};
use crate::error::StateError;
use crate::rank::{parity, partial_count, rank_partial, unrank_partial};

pub const MAX_SIDE: usize = 5;
pub const MAX_CELLS: usize = MAX_SIDE * MAX_SIDE;

pub const UP: Action = Action(0);
pub const DOWN: Action = Action(1);
pub const LEFT: Action = Action(2);
pub const RIGHT: Action = Action(3);

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TileState {
    side: u8,
    blank: u8,
    cells: [u8; MAX_CELLS],
}

impl TileState {
    /// Builds a state from the label in each cell, row-major.
    pub fn from_cells(side: usize, cells: &[u8]) -> Result<Self, StateError> {
        if !(2..=MAX_SIDE).contains(&side) {
            return Err(StateError::UnsupportedSize(side));
        }
        let m = side * side;
        if cells.len() != m {
            return Err(StateError::Invalid(format!("expected {m} cells, got {}", cells.len())));
        }
        let mut seen = 0u32;
        let mut blank = 0;
        let mut packed = [0u8; MAX_CELLS];
        for (i, &l) in cells.iter().enumerate() {
            if l as usize >= m || seen & (1 << l) != 0 {
                return Err(StateError::Invalid(format!("cells are not a permutation of 0..{m}")));
            }
            seen |= 1 << l;
            if l == 0 {
                blank = i as u8;
            }
            packed[i] = l;
        }
        Ok(Self { side: side as u8, blank, cells: packed })
    }

    pub fn side(&self) -> usize {
        self.side as usize
    }

    pub fn blank(&self) -> usize {
        self.blank as usize
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells[..self.side as usize * self.side as usize]
    }

    fn position_of(&self, label: u8) -> usize {
        self.cells().iter().position(|&l| l == label).expect("valid state holds every label")
    }
}

impl fmt::Debug for TileState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TileState{:?}", self.cells())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SlidingTile {
    side: u8,
}

impl SlidingTile {
    pub fn new(side: usize) -> Result<Self, StateError> {
        if !(2..=MAX_SIDE).contains(&side) {
            return Err(StateError::UnsupportedSize(side));
        }
        Ok(Self { side: side as u8 })
    }

    pub fn side(&self) -> usize {
        self.side as usize
    }

    pub fn cells(&self) -> usize {
        self.side() * self.side()
    }

    /// Cell the blank moves into, if the move stays on the board.
    fn target(&self, blank: usize, action: Action) -> Option<usize> {
        let n = self.side();
        let (r, c) = (blank / n, blank % n);
        match action.0 {
            0 if r > 0 => Some(blank - n),
            1 if r + 1 < n => Some(blank + n),
            2 if c > 0 => Some(blank - 1),
            3 if c + 1 < n => Some(blank + 1),
            _ => None,
        }
    }

    fn parity_class(&self, s: &TileState) -> bool {
        let n = self.side();
        let b = s.blank();
        parity(s.cells()) ^ ((b / n + b % n) % 2 == 1)
    }
}

impl Domain for SlidingTile {
    type State = TileState;

    fn tag(&self) -> DomainTag {
        DomainTag::Stp(self.side)
    }

    fn goal(&self) -> TileState {
        let cells: Vec<u8> = (0..self.cells() as u8).collect();
        TileState::from_cells(self.side(), &cells).expect("identity is a permutation")
    }

    fn is_valid(&self, s: &TileState) -> bool {
        s.side == self.side && TileState::from_cells(self.side(), s.cells()).as_ref() == Ok(s)
    }

    fn is_solvable(&self, start: &TileState, goal: &TileState) -> bool {
        self.parity_class(start) == self.parity_class(goal)
    }

    fn actions(&self, s: &TileState, last: Option<Action>, pruning: bool) -> ActionList {
        let mut out = ActionList::new();
        for a in 0..4 {
            let a = Action(a);
            if pruning && last.map(|l| self.inverse(l)) == Some(a) {
                continue;
            }
            if self.target(s.blank(), a).is_some() {
                out.push(a);
            }
        }
        out
    }

    fn inverse(&self, a: Action) -> Action {
        Action(a.0 ^ 1)
    }

    fn apply(&self, s: &TileState, a: Action) -> Result<TileState, StateError> {
        let to = self.target(s.blank(), a).filter(|_| a.0 < 4).ok_or(StateError::IllegalAction(a))?;
        let mut next = s.clone();
        next.cells[s.blank()] = s.cells[to];
        next.cells[to] = 0;
        next.blank = to as u8;
        Ok(next)
    }

    fn max_branching(&self) -> usize {
        4
    }

    fn feature_len(&self) -> usize {
        self.cells() * self.cells()
    }

    fn encode_features(&self, s: &TileState) -> FeatureVector {
        let m = self.cells();
        FeatureVector {
            len: (m * m) as u32,
            hot: s.cells().iter().enumerate().map(|(cell, &l)| (cell * m + l as usize) as u16).collect(),
        }
    }

    fn decode_features(&self, f: &FeatureVector) -> Result<TileState, StateError> {
        let m = self.cells();
        if f.len as usize != m * m || f.hot.len() != m {
            return Err(StateError::BadFeatures(format!("expected {m} entries of a {m}x{m} one-hot")));
        }
        let mut cells = [u8::MAX; MAX_CELLS];
        for &h in &f.hot {
            let (cell, label) = (h as usize / m, h as usize % m);
            if cell >= m || cells[cell] != u8::MAX {
                return Err(StateError::BadFeatures(format!("cell {cell} encoded twice or out of range")));
            }
            cells[cell] = label as u8;
        }
        TileState::from_cells(self.side(), &cells[..m]).map_err(|e| StateError::BadFeatures(format!("{e}")))
    }
}

impl PatternSpace for SlidingTile {
    fn abstract_size(&self, pattern: &[u8]) -> Result<u64, StateError> {
        check_pattern(pattern, self.cells())?;
        Ok(partial_count(self.cells(), pattern.len()))
    }

    fn rank(&self, s: &TileState, pattern: &[u8]) -> Result<u64, StateError> {
        check_pattern(pattern, self.cells())?;
        let mut locs = [0u8; MAX_CELLS];
        for (i, &l) in pattern.iter().enumerate() {
            locs[i] = s.position_of(l) as u8;
        }
        Ok(rank_partial(&locs[..pattern.len()], self.cells()))
    }

    fn unrank(&self, index: u64, pattern: &[u8]) -> Result<TileState, StateError> {
        let size = self.abstract_size(pattern)?;
        if index >= size {
            return Err(StateError::IndexOutOfRange { index, size });
        }
        let m = self.cells();
        let locs = unrank_partial(index, pattern.len(), m);
        let mut cells = [u8::MAX; MAX_CELLS];
        let mut tracked = 0u32;
        for (&l, &loc) in pattern.iter().zip(&locs) {
            cells[loc as usize] = l;
            tracked |= 1 << l;
        }
        let mut fill = (0..m as u8).filter(|l| tracked & (1 << l) == 0);
        for c in cells[..m].iter_mut().filter(|c| **c == u8::MAX) {
            *c = fill.next().expect("free cells match untracked labels");
        }
        TileState::from_cells(self.side(), &cells[..m])
    }

    fn walk_pattern(&self, pattern: &[u8]) -> Vec<u8> {
        let mut walk = pattern.to_vec();
        if !walk.contains(&0) {
            walk.push(0);
        }
        walk
    }

    /// Without the blank in the pattern only moves of tracked tiles are
    /// charged, which keeps disjoint patterns additive.
    fn abstract_cost(&self, s: &TileState, a: Action, pattern: &[u8]) -> u8 {
        if pattern.contains(&0) {
            return 1;
        }
        match self.target(s.blank(), a) {
            Some(to) if pattern.contains(&s.cells[to]) => 1,
            _ => 0,
        }
    }

    fn manhattan(&self, s: &TileState) -> Option<Cost> {
        let n = self.side();
        let d = s
            .cells()
            .iter()
            .enumerate()
            .filter(|(_, &l)| l != 0)
            .map(|(cell, &l)| {
                let (r, c) = (cell / n, cell % n);
                let (gr, gc) = (l as usize / n, l as usize % n);
                (r.abs_diff(gr) + c.abs_diff(gc)) as Cost
            })
            .sum();
        Some(d)
    }
}
