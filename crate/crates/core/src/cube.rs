//! The 3x3x3 Rubik's cube at cubie level.
//!
//! Corner positions: URF UFL ULB UBR DFR DLF DBL DRB (0..8).
//! Edge positions: UR UF UL UB DR DF DL DB FR FL BL BR (0..12).
//! `cp[i]` is the corner cubie sitting at position `i` and `co[i]` its twist
//! (0..3); `ep`/`eo` likewise for edges with flips 0..2.
//!
//! Action `3 * face + t` turns `face` (U D L R F B) clockwise by
//! `90 * (t + 1)` degrees, seen from that face.
//!
//! Pattern labels: 0..8 name corner cubies, 8..20 name edge cubies
//! (edge `e` is label `8 + e`). A pattern tracks both position and
//! orientation of each listed cubie.

use alloc::format;
use alloc::vec::Vec;

use crate::domain::{check_pattern, Action, ActionList, Domain, DomainTag, FeatureVector, PatternSpace};
use crate::error::StateError;
use crate::rank::{parity, partial_count, rank_partial, unrank_partial};

pub const FACES: [char; 6] = ['U', 'D', 'L', 'R', 'F', 'B'];
pub const CORNER_LABELS: u8 = 8;
pub const LABELS: usize = 20;
const CORNER_FEATURES: usize = 8 * 24;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CubeState {
    pub cp: [u8; 8],
    pub co: [u8; 8],
    pub ep: [u8; 12],
    pub eo: [u8; 12],
}

struct Turn {
    cp: [u8; 8],
    co: [u8; 8],
    ep: [u8; 12],
    eo: [u8; 12],
}

// Quarter turns in face order U D L R F B.
const TURNS: [Turn; 6] = [
    Turn {
        cp: [3, 0, 1, 2, 4, 5, 6, 7],
        co: [0; 8],
        ep: [3, 0, 1, 2, 4, 5, 6, 7, 8, 9, 10, 11],
        eo: [0; 12],
    },
    Turn {
        cp: [0, 1, 2, 3, 5, 6, 7, 4],
        co: [0; 8],
        ep: [0, 1, 2, 3, 5, 6, 7, 4, 8, 9, 10, 11],
        eo: [0; 12],
    },
    Turn {
        cp: [0, 2, 6, 3, 4, 1, 5, 7],
        co: [0, 1, 2, 0, 0, 2, 1, 0],
        ep: [0, 1, 10, 3, 4, 5, 9, 7, 8, 2, 6, 11],
        eo: [0; 12],
    },
    Turn {
        cp: [4, 1, 2, 0, 7, 5, 6, 3],
        co: [2, 0, 0, 1, 1, 0, 0, 2],
        ep: [8, 1, 2, 3, 11, 5, 6, 7, 4, 9, 10, 0],
        eo: [0; 12],
    },
    Turn {
        cp: [1, 5, 2, 3, 0, 4, 6, 7],
        co: [1, 2, 0, 0, 2, 1, 0, 0],
        ep: [0, 9, 2, 3, 4, 8, 6, 7, 1, 5, 10, 11],
        eo: [0, 1, 0, 0, 0, 1, 0, 0, 1, 1, 0, 0],
    },
    Turn {
        cp: [0, 1, 3, 7, 4, 5, 2, 6],
        co: [0, 0, 1, 2, 0, 0, 2, 1],
        ep: [0, 1, 2, 11, 4, 5, 6, 10, 8, 9, 3, 7],
        eo: [0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 1, 1],
    },
];

impl CubeState {
    pub fn solved() -> Self {
        Self {
            cp: [0, 1, 2, 3, 4, 5, 6, 7],
            co: [0; 8],
            ep: [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11],
            eo: [0; 12],
        }
    }

    /// Validating constructor; rejects states no sequence of turns reaches.
    pub fn from_parts(cp: [u8; 8], co: [u8; 8], ep: [u8; 12], eo: [u8; 12]) -> Result<Self, StateError> {
        let s = Self { cp, co, ep, eo };
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<(), StateError> {
        let perm_ok = |p: &[u8]| {
            let mut seen = 0u32;
            p.iter().all(|&x| {
                let fresh = (x as usize) < p.len() && seen & (1 << x) == 0;
                seen |= 1 << x;
                fresh
            })
        };
        if !perm_ok(&self.cp) || !perm_ok(&self.ep) {
            return Err(StateError::Invalid("cubie permutation is not a permutation".into()));
        }
        if self.co.iter().any(|&o| o > 2) || self.eo.iter().any(|&o| o > 1) {
            return Err(StateError::Invalid("orientation out of range".into()));
        }
        if self.co.iter().map(|&o| o as u32).sum::<u32>() % 3 != 0 {
            return Err(StateError::Invalid("corner twists do not sum to 0 mod 3".into()));
        }
        if self.eo.iter().map(|&o| o as u32).sum::<u32>() % 2 != 0 {
            return Err(StateError::Invalid("edge flips do not sum to 0 mod 2".into()));
        }
        if parity(&self.cp) != parity(&self.ep) {
            return Err(StateError::Invalid("corner and edge permutation parities differ".into()));
        }
        Ok(())
    }

    fn turn(&self, t: &Turn) -> Self {
        let mut next = self.clone();
        for i in 0..8 {
            let from = t.cp[i] as usize;
            next.cp[i] = self.cp[from];
            next.co[i] = (self.co[from] + t.co[i]) % 3;
        }
        for i in 0..12 {
            let from = t.ep[i] as usize;
            next.ep[i] = self.ep[from];
            next.eo[i] = (self.eo[from] + t.eo[i]) % 2;
        }
        next
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RubiksCube;

impl RubiksCube {
    pub fn face(a: Action) -> usize {
        a.0 as usize / 3
    }

    pub fn action_name(a: Action) -> alloc::string::String {
        let suffix = ["", "2", "'"][a.0 as usize % 3];
        format!("{}{}", FACES[Self::face(a)], suffix)
    }

    fn split(pattern: &[u8]) -> (Vec<u8>, Vec<u8>) {
        let corners = pattern.iter().copied().filter(|&l| l < CORNER_LABELS).collect();
        let edges = pattern.iter().filter(|&&l| l >= CORNER_LABELS).map(|&l| l - CORNER_LABELS).collect();
        (corners, edges)
    }

    fn part_size(slots: usize, k: usize, twists: u64) -> u64 {
        partial_count(slots, k) * twists.pow(k as u32)
    }

    fn rank_part(perm: &[u8], ori: &[u8], tracked: &[u8], twists: u64) -> u64 {
        let mut locs = [0u8; 12];
        let mut o = 0u64;
        for (i, &c) in tracked.iter().enumerate() {
            let pos = perm.iter().position(|&x| x == c).expect("valid permutation");
            locs[i] = pos as u8;
            o = o * twists + ori[pos] as u64;
        }
        rank_partial(&locs[..tracked.len()], perm.len()) * twists.pow(tracked.len() as u32) + o
    }

    /// Places the tracked cubies and fills the rest so that the result is a
    /// legal cube whenever enough untracked cubies remain to fix parity and
    /// orientation sums.
    fn unrank_part(index: u64, tracked: &[u8], perm: &mut [u8], ori: &mut [u8], twists: u64) -> Vec<usize> {
        let k = tracked.len();
        let orient_count = twists.pow(k as u32);
        let (placement, mut o) = (index / orient_count, index % orient_count);
        let locs = unrank_partial(placement, k, perm.len());
        perm.iter_mut().for_each(|p| *p = u8::MAX);
        ori.iter_mut().for_each(|x| *x = 0);
        for i in (0..k).rev() {
            ori[locs[i] as usize] = (o % twists) as u8;
            o /= twists;
        }
        for (&c, &loc) in tracked.iter().zip(&locs) {
            perm[loc as usize] = c;
        }
        let mut fill = (0..perm.len() as u8).filter(|c| !tracked.contains(c));
        let mut free = Vec::new();
        for (i, p) in perm.iter_mut().enumerate() {
            if *p == u8::MAX {
                *p = fill.next().expect("free slots match untracked cubies");
                free.push(i);
            }
        }
        if let Some(&last) = free.last() {
            let sum: u64 = ori.iter().map(|&x| x as u64).sum();
            ori[last] = ((twists - sum % twists) % twists) as u8;
        }
        free
    }
}

impl Domain for RubiksCube {
    type State = CubeState;

    fn tag(&self) -> DomainTag {
        DomainTag::Cube
    }

    fn goal(&self) -> CubeState {
        CubeState::solved()
    }

    fn is_valid(&self, s: &CubeState) -> bool {
        s.check().is_ok()
    }

    fn is_solvable(&self, start: &CubeState, goal: &CubeState) -> bool {
        self.is_valid(start) && self.is_valid(goal)
    }

    fn actions(&self, _s: &CubeState, last: Option<Action>, pruning: bool) -> ActionList {
        let banned = if pruning { last.map(Self::face) } else { None };
        (0..18u8).map(Action).filter(|&a| Some(Self::face(a)) != banned).collect()
    }

    fn inverse(&self, a: Action) -> Action {
        Action(a.0 / 3 * 3 + (2 - a.0 % 3))
    }

    fn apply(&self, s: &CubeState, a: Action) -> Result<CubeState, StateError> {
        if a.0 >= 18 {
            return Err(StateError::IllegalAction(a));
        }
        let turn = &TURNS[Self::face(a)];
        let mut next = s.turn(turn);
        for _ in 0..a.0 % 3 {
            next = next.turn(turn);
        }
        Ok(next)
    }

    fn max_branching(&self) -> usize {
        18
    }

    fn feature_len(&self) -> usize {
        CORNER_FEATURES + 12 * 24
    }

    fn encode_features(&self, s: &CubeState) -> FeatureVector {
        let corners = (0..8).map(|i| (i * 24 + s.cp[i] as usize * 3 + s.co[i] as usize) as u16);
        let edges = (0..12).map(|i| (CORNER_FEATURES + i * 24 + s.ep[i] as usize * 2 + s.eo[i] as usize) as u16);
        FeatureVector { len: self.feature_len() as u32, hot: corners.chain(edges).collect() }
    }

    fn decode_features(&self, f: &FeatureVector) -> Result<CubeState, StateError> {
        if f.len as usize != self.feature_len() || f.hot.len() != 20 {
            return Err(StateError::BadFeatures("expected 20 one-hot rows of width 24".into()));
        }
        let mut s = CubeState::solved();
        let mut seen = 0u32;
        for &h in &f.hot {
            let h = h as usize;
            if h < CORNER_FEATURES {
                let (i, v) = (h / 24, h % 24);
                s.cp[i] = (v / 3) as u8;
                s.co[i] = (v % 3) as u8;
                seen |= 1 << i;
            } else if h < self.feature_len() {
                let (i, v) = ((h - CORNER_FEATURES) / 24, (h - CORNER_FEATURES) % 24);
                s.ep[i] = (v / 2) as u8;
                s.eo[i] = (v % 2) as u8;
                seen |= 1 << (8 + i);
            }
        }
        if seen != (1 << 20) - 1 {
            return Err(StateError::BadFeatures("a cubie position is missing".into()));
        }
        s.check().map_err(|e| StateError::BadFeatures(format!("{e}")))?;
        Ok(s)
    }
}

impl PatternSpace for RubiksCube {
    fn abstract_size(&self, pattern: &[u8]) -> Result<u64, StateError> {
        check_pattern(pattern, LABELS)?;
        let (c, e) = Self::split(pattern);
        Self::part_size(8, c.len(), 3)
            .checked_mul(Self::part_size(12, e.len(), 2))
            .ok_or_else(|| StateError::Invalid("abstract space does not fit in 64 bits".into()))
    }

    fn rank(&self, s: &CubeState, pattern: &[u8]) -> Result<u64, StateError> {
        self.abstract_size(pattern)?;
        let (c, e) = Self::split(pattern);
        let edge_size = Self::part_size(12, e.len(), 2);
        Ok(Self::rank_part(&s.cp, &s.co, &c, 3) * edge_size + Self::rank_part(&s.ep, &s.eo, &e, 2))
    }

    fn unrank(&self, index: u64, pattern: &[u8]) -> Result<CubeState, StateError> {
        let size = self.abstract_size(pattern)?;
        if index >= size {
            return Err(StateError::IndexOutOfRange { index, size });
        }
        let (c, e) = Self::split(pattern);
        let edge_size = Self::part_size(12, e.len(), 2);
        let mut s = CubeState::solved();
        let free_c = Self::unrank_part(index / edge_size, &c, &mut s.cp, &mut s.co, 3);
        let free_e = Self::unrank_part(index % edge_size, &e, &mut s.ep, &mut s.eo, 2);
        if parity(&s.cp) != parity(&s.ep) {
            if free_c.len() >= 2 {
                let (a, b) = (free_c[0], free_c[1]);
                s.cp.swap(a, b);
                s.co.swap(a, b);
            } else if free_e.len() >= 2 {
                let (a, b) = (free_e[0], free_e[1]);
                s.ep.swap(a, b);
                s.eo.swap(a, b);
            }
        }
        Ok(s)
    }
}
