use alloc::sync::Arc;
use alloc::vec::Vec;

use super::compress::CompressedPdb;
use super::pdb::PdbTable;
use crate::domain::{Cost, PatternSpace};
use crate::error::HeuristicError;

/// The closed set of table-backed heuristics. All variants are admissible
/// by construction.
#[derive(Clone, Debug)]
pub enum HeuristicSource {
    Zero,
    Manhattan,
    Pdb(Arc<PdbTable>),
    Compressed(Arc<CompressedPdb>),
    /// Sum of disjoint additive tables.
    Additive(Vec<Arc<PdbTable>>),
}

impl HeuristicSource {
    pub fn pdb(table: PdbTable) -> Self {
        Self::Pdb(Arc::new(table))
    }

    pub fn compressed(table: CompressedPdb) -> Self {
        Self::Compressed(Arc::new(table))
    }

    pub fn additive(tables: impl IntoIterator<Item = PdbTable>) -> Self {
        Self::Additive(tables.into_iter().map(Arc::new).collect())
    }

    /// Checks that every table was built for `domain`'s tag and that a
    /// Manhattan heuristic is defined there.
    pub fn validate_for<D: PatternSpace>(&self, domain: &D) -> Result<(), HeuristicError> {
        let tag = domain.tag();
        let ok = match self {
            Self::Zero => true,
            Self::Manhattan => domain.manhattan(&domain.goal()).is_some(),
            Self::Pdb(t) => t.domain() == tag,
            Self::Compressed(t) => t.domain() == tag,
            Self::Additive(ts) => ts.iter().all(|t| t.domain() == tag),
        };
        if ok {
            Ok(())
        } else {
            Err(HeuristicError::WrongDomain("table or heuristic built for another domain"))
        }
    }

    pub fn lookup<D: PatternSpace>(&self, domain: &D, state: &D::State) -> Cost {
        let table = |r: Result<u8, _>| r.expect("heuristic validated for this domain") as Cost;
        match self {
            Self::Zero => 0,
            Self::Manhattan => domain.manhattan(state).unwrap_or(0),
            Self::Pdb(t) => table(t.lookup(domain, state)),
            Self::Compressed(t) => table(t.lookup(domain, state)),
            Self::Additive(ts) => ts.iter().map(|t| table(t.lookup(domain, state))).sum(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heuristics::{build_pdb, DEFAULT_ENTRY_CAP};
    use crate::{random_walk_instance, Domain, RubiksCube, SlidingTile};

    #[test]
    fn zero_everywhere() {
        let d = SlidingTile::new(3).unwrap();
        for seed in 0..20 {
            let s = random_walk_instance(&d, &d.goal(), 15, seed).start;
            assert_eq!(HeuristicSource::Zero.lookup(&d, &s), 0);
        }
    }

    #[test]
    fn additive_dominates_components() {
        let d = SlidingTile::new(3).unwrap();
        let a = build_pdb(&d, &[1, 2, 3], &d.goal(), DEFAULT_ENTRY_CAP).unwrap();
        let b = build_pdb(&d, &[4, 5, 6, 7, 8], &d.goal(), DEFAULT_ENTRY_CAP).unwrap();
        let sum = HeuristicSource::additive([a.clone(), b.clone()]);
        for seed in 0..50 {
            let s = random_walk_instance(&d, &d.goal(), 20, seed).start;
            let total = sum.lookup(&d, &s);
            assert!(total >= a.lookup(&d, &s).unwrap() as Cost);
            assert!(total >= b.lookup(&d, &s).unwrap() as Cost);
        }
    }

    #[test]
    fn manhattan_rejected_for_cube() {
        assert!(HeuristicSource::Manhattan.validate_for(&RubiksCube).is_err());
        assert!(HeuristicSource::Manhattan.validate_for(&SlidingTile::new(4).unwrap()).is_ok());
        let stp_table = build_pdb(&SlidingTile::new(3).unwrap(), &[0, 1], &SlidingTile::new(3).unwrap().goal(), 1 << 20).unwrap();
        assert!(HeuristicSource::pdb(stp_table).validate_for(&RubiksCube).is_err());
    }
}
