//! Seeded instance generators and the instance suites shipped with the
//! crate.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use batchida_core::{random_walk_instance, CubeState, Domain, Instance, RubiksCube, SlidingTile, TileState};

use crate::formats::{parse_instances, AnyInstance, FormatError};

/// `count` tile-puzzle states drawn uniformly from the goal's parity class.
pub fn uniform_stp(side: usize, count: usize, seed: u64) -> Vec<Instance<TileState>> {
    let domain = SlidingTile::new(side).expect("supported puzzle size");
    let goal = domain.goal();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut cells: Vec<u8> = (0..(side * side) as u8).collect();
        cells.shuffle(&mut rng);
        let state = TileState::from_cells(side, &cells).expect("a permutation of all labels");
        if domain.is_solvable(&state, &goal) {
            let mut inst = Instance::new(state, goal.clone(), format!("stp{side}-{seed}-{}", out.len()));
            inst.seed = Some(seed);
            out.push(inst);
        }
    }
    out
}

/// Random walks from the solved state with lengths drawn from
/// `min_len..=max_len`, one derived seed per walk.
pub fn walks<D: Domain>(domain: &D, count: usize, min_len: usize, max_len: usize, seed: u64) -> Vec<Instance<D::State>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let len = rng.random_range(min_len..=max_len);
            let mut inst = random_walk_instance(domain, &domain.goal(), len, rng.random());
            inst.label = format!("walk{len}-{seed}-{i}");
            inst
        })
        .collect()
}

pub fn cube_walks(count: usize, min_len: usize, max_len: usize, seed: u64) -> Vec<Instance<CubeState>> {
    walks(&RubiksCube, count, min_len, max_len, seed)
}

/// 100 uniformly drawn 8-puzzle instances.
pub const STP3_SUITE: &str = include_str!("../data/stp3-100.txt");
/// 50 cube random walks of length 5 to 7.
pub const RC_SUITE: &str = include_str!("../data/rc-walks-50.txt");
/// The first ten of Korf's 100 random 15-puzzle instances.
pub const KORF10_SUITE: &str = include_str!("../data/korf-10.txt");

/// Loads a shipped suite by name: `stp3`, `rc`, or `korf10`.
pub fn builtin(name: &str) -> Result<Vec<AnyInstance>, FormatError> {
    let (text, label) = match name {
        "stp3" => (STP3_SUITE, "stp3"),
        "rc" => (RC_SUITE, "rc"),
        "korf10" => (KORF10_SUITE, "korf"),
        _ => return Err(FormatError::UnknownSuite(name.to_string())),
    };
    parse_instances(text, label)
}
