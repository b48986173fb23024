use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::domain::{DomainTag, PatternSpace};
use crate::error::{HeuristicError, StateError};

/// Marks abstract states the backward search never reached.
pub const UNREACHED: u8 = u8::MAX;

/// Default limit on abstract-space entries walked while building a table.
pub const DEFAULT_ENTRY_CAP: u64 = 64 << 20;

/// Goal distances indexed by the rank of a placement of `index` labels.
///
/// `pattern` lists the labels whose moves are charged. `index` is the
/// domain's walk pattern for it: the same labels, plus the blank for tile
/// puzzles whose pattern leaves the blank out.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PdbTable {
    domain: DomainTag,
    pattern: Vec<u8>,
    index: Vec<u8>,
    entries: Vec<u8>,
}

impl PdbTable {
    /// Wraps precomputed entries, e.g. read from disk. The caller vouches
    /// that `entries` has one slot per placement of `index`.
    pub fn from_entries(domain: DomainTag, pattern: Vec<u8>, index: Vec<u8>, entries: Vec<u8>) -> Self {
        Self { domain, pattern, index, entries }
    }

    pub fn domain(&self) -> DomainTag {
        self.domain
    }

    pub fn pattern(&self) -> &[u8] {
        &self.pattern
    }

    pub fn index_pattern(&self) -> &[u8] {
        &self.index
    }

    pub fn entries(&self) -> &[u8] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest finite distance in the table.
    pub fn max_depth(&self) -> u8 {
        self.entries.iter().copied().filter(|&e| e != UNREACHED).max().unwrap_or(0)
    }

    pub fn lookup<D: PatternSpace>(&self, domain: &D, state: &D::State) -> Result<u8, StateError> {
        Ok(self.entries[domain.rank(state, &self.index)? as usize])
    }
}

/// Exact abstract goal distances by a backward breadth-first search from
/// the abstraction of `goal`.
///
/// When the domain walks a larger abstraction than `pattern` (the tile
/// puzzle tracks the blank as well), moves that do not touch tracked
/// labels cost 0. Such tables stay indexed by the larger abstraction:
/// taking the minimum over blank positions would break consistency.
pub fn build_pdb<D: PatternSpace>(
    domain: &D,
    pattern: &[u8],
    goal: &D::State,
    cap: u64,
) -> Result<PdbTable, HeuristicError> {
    domain.abstract_size(pattern)?;
    let walk = domain.walk_pattern(pattern);
    let walk_size = domain.abstract_size(&walk)?;
    if walk_size > cap {
        return Err(HeuristicError::TooLarge { required: walk_size, cap });
    }
    let mut dist = vec![UNREACHED; walk_size as usize];
    let start = domain.rank(goal, &walk)?;
    dist[start as usize] = 0;
    let mut queue: VecDeque<(u32, u8)> = VecDeque::new();
    queue.push_back((start as u32, 0));
    while let Some((idx, d)) = queue.pop_front() {
        if dist[idx as usize] < d {
            continue;
        }
        let s = domain.unrank(idx as u64, &walk)?;
        for a in domain.actions(&s, None, false) {
            let cost = domain.abstract_cost(&s, a, pattern);
            let next = domain.apply(&s, a)?;
            let j = domain.rank(&next, &walk)? as usize;
            let nd = d.saturating_add(cost);
            if nd < dist[j] {
                dist[j] = nd;
                if cost == 0 {
                    queue.push_front((j as u32, nd));
                } else {
                    queue.push_back((j as u32, nd));
                }
            }
        }
    }
    Ok(PdbTable { domain: domain.tag(), pattern: pattern.to_vec(), index: walk, entries: dist })
}
