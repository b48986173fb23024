//! Uninformed breadth-first oracles used to check optimality.

use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::domain::{Cost, Domain};
use crate::error::SearchError;

/// Exact optimal cost by bidirectional breadth-first search, always
/// growing the smaller frontier by one full layer. `cap` bounds the number
/// of states held by both sides together.
pub fn bfs_oracle<D: Domain>(domain: &D, start: &D::State, goal: &D::State, cap: usize) -> Result<Cost, SearchError> {
    if start == goal {
        return Ok(0);
    }
    let mut fwd: HashMap<D::State, Cost> = HashMap::new();
    let mut bwd: HashMap<D::State, Cost> = HashMap::new();
    fwd.insert(start.clone(), 0);
    bwd.insert(goal.clone(), 0);
    let mut fwd_layer = alloc::vec![start.clone()];
    let mut bwd_layer = alloc::vec![goal.clone()];
    let (mut fwd_depth, mut bwd_depth) = (0, 0);
    while !fwd_layer.is_empty() && !bwd_layer.is_empty() {
        let forward = fwd_layer.len() <= bwd_layer.len();
        let (layer, seen, other, depth) = if forward {
            (&mut fwd_layer, &mut fwd, &bwd, &mut fwd_depth)
        } else {
            (&mut bwd_layer, &mut bwd, &fwd, &mut bwd_depth)
        };
        let mut best: Option<Cost> = None;
        let mut next = Vec::new();
        for s in layer.iter() {
            for a in domain.actions(s, None, false) {
                let t = domain.apply(s, a).expect("actions() only yields legal moves");
                if let Some(&d) = other.get(&t) {
                    let total = *depth + 1 + d;
                    best = Some(best.map_or(total, |b: Cost| b.min(total)));
                }
                if !seen.contains_key(&t) {
                    seen.insert(t.clone(), *depth + 1);
                    next.push(t);
                }
            }
        }
        if let Some(b) = best {
            return Ok(b);
        }
        if fwd.len() + bwd.len() > cap {
            return Err(SearchError::MemoryCap { cap });
        }
        *depth += 1;
        if forward {
            fwd_layer = next;
        } else {
            bwd_layer = next;
        }
    }
    Err(SearchError::Exhausted)
}

/// Distance to `goal` for every state in its component. Moves are
/// reversible in both domains, so a forward search from the goal suffices.
pub fn goal_distances<D: Domain>(domain: &D, goal: &D::State, cap: usize) -> Result<HashMap<D::State, u8>, SearchError> {
    let mut dist = HashMap::new();
    dist.insert(goal.clone(), 0u8);
    let mut layer = alloc::vec![goal.clone()];
    let mut depth = 0u8;
    while !layer.is_empty() {
        let mut next = Vec::new();
        for s in &layer {
            for a in domain.actions(s, None, false) {
                let t = domain.apply(s, a).expect("actions() only yields legal moves");
                if !dist.contains_key(&t) {
                    dist.insert(t.clone(), depth + 1);
                    next.push(t);
                }
            }
        }
        if dist.len() > cap {
            return Err(SearchError::MemoryCap { cap });
        }
        depth += 1;
        layer = next;
    }
    Ok(dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{random_walk_instance, Action, RubiksCube, SlidingTile};

    #[test]
    fn trivial_costs() {
        let d = SlidingTile::new(3).unwrap();
        let g = d.goal();
        assert_eq!(bfs_oracle(&d, &g, &g, 1000).unwrap(), 0);
        let one = d.apply(&g, Action(1)).unwrap();
        assert_eq!(bfs_oracle(&d, &one, &g, 1000).unwrap(), 1);
    }

    #[test]
    fn eight_puzzle_component_and_diameter() {
        let d = SlidingTile::new(3).unwrap();
        let dist = goal_distances(&d, &d.goal(), 200_000).unwrap();
        assert_eq!(dist.len(), 181_440);
        assert_eq!(*dist.values().max().unwrap(), 31);
        for seed in 0..30 {
            let s = random_walk_instance(&d, &d.goal(), 25, seed).start;
            assert_eq!(bfs_oracle(&d, &s, &d.goal(), 1 << 20).unwrap(), dist[&s] as Cost);
        }
        let hardest: Vec<_> = dist.iter().filter(|(_, &v)| v == 31).map(|(s, _)| s.clone()).collect();
        assert_eq!(hardest.len(), 2);
        for s in hardest {
            assert_eq!(bfs_oracle(&d, &s, &d.goal(), 1 << 20).unwrap(), 31);
        }
    }

    #[test]
    fn cube_walk_bounded_by_length() {
        let d = RubiksCube;
        for seed in 0..5 {
            let inst = random_walk_instance(&d, &d.goal(), 7, seed);
            let c = bfs_oracle(&d, &inst.start, &inst.goal, 4_000_000).unwrap();
            assert!(c <= 7);
        }
    }

    #[test]
    fn unsolvable_exhausts_and_cap_trips() {
        let d = SlidingTile::new(2).unwrap();
        let s = crate::TileState::from_cells(2, &[0, 2, 1, 3]).unwrap();
        assert_eq!(bfs_oracle(&d, &s, &d.goal(), 1000), Err(SearchError::Exhausted));
        let cube = RubiksCube;
        let far = random_walk_instance(&cube, &cube.goal(), 12, 1).start;
        assert_eq!(bfs_oracle(&cube, &far, &cube.goal(), 100), Err(SearchError::MemoryCap { cap: 100 }));
    }
}
