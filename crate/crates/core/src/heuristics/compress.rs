use alloc::vec;
use alloc::vec::Vec;

use super::pdb::{PdbTable, UNREACHED};
use crate::domain::{DomainTag, PatternSpace};
use crate::error::{HeuristicError, StateError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CompressionMode {
    /// Groups `k` adjacent entries: index `j` maps to `j / k`.
    Div,
    /// Groups entries one stride apart: index `j` maps to `j % ceil(m / k)`.
    /// When `k` does not divide `m` the last round is ragged.
    Mod,
}

/// A PDB shrunk by a factor `k`, each slot holding the minimum of its group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompressedPdb {
    domain: DomainTag,
    pattern: Vec<u8>,
    source_len: u64,
    factor: u64,
    mode: CompressionMode,
    entries: Vec<u8>,
}

impl CompressedPdb {
    pub fn from_parts(
        domain: DomainTag,
        pattern: Vec<u8>,
        source_len: u64,
        factor: u64,
        mode: CompressionMode,
        entries: Vec<u8>,
    ) -> Self {
        Self { domain, pattern, source_len, factor, mode, entries }
    }

    pub fn domain(&self) -> DomainTag {
        self.domain
    }

    pub fn source_len(&self) -> u64 {
        self.source_len
    }

    pub fn factor(&self) -> u64 {
        self.factor
    }

    pub fn mode(&self) -> CompressionMode {
        self.mode
    }

    pub fn entries(&self) -> &[u8] {
        &self.entries
    }

    /// Labels the source table was indexed by.
    pub fn index_pattern(&self) -> &[u8] {
        &self.pattern
    }

    pub fn slot(&self, index: u64) -> usize {
        slot(index, self.source_len(), self.factor, self.mode)
    }

    pub fn lookup<D: PatternSpace>(&self, domain: &D, state: &D::State) -> Result<u8, StateError> {
        Ok(self.entries[self.slot(domain.rank(state, &self.pattern)?)])
    }
}

fn slot(index: u64, m: u64, k: u64, mode: CompressionMode) -> usize {
    match mode {
        CompressionMode::Div => (index / k) as usize,
        CompressionMode::Mod => (index % m.div_ceil(k)) as usize,
    }
}

/// Group minima of `entries` under `mode` with factor `k`.
pub fn compress_entries(entries: &[u8], k: u64, mode: CompressionMode) -> Result<Vec<u8>, HeuristicError> {
    if k == 0 {
        return Err(HeuristicError::ZeroFactor);
    }
    let m = entries.len() as u64;
    let mut out = vec![UNREACHED; m.div_ceil(k) as usize];
    for (j, &e) in entries.iter().enumerate() {
        let s = slot(j as u64, m, k, mode);
        out[s] = out[s].min(e);
    }
    Ok(out)
}

pub fn compress_div(pdb: &PdbTable, k: u64) -> Result<CompressedPdb, HeuristicError> {
    compress(pdb, k, CompressionMode::Div)
}

pub fn compress_mod(pdb: &PdbTable, k: u64) -> Result<CompressedPdb, HeuristicError> {
    compress(pdb, k, CompressionMode::Mod)
}

fn compress(pdb: &PdbTable, k: u64, mode: CompressionMode) -> Result<CompressedPdb, HeuristicError> {
    let entries = compress_entries(pdb.entries(), k, mode)?;
    Ok(CompressedPdb {
        domain: pdb.domain(),
        pattern: pdb.index_pattern().to_vec(),
        source_len: pdb.len() as u64,
        factor: k,
        mode,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(entries: &[u8]) -> PdbTable {
        PdbTable::from_entries(DomainTag::Stp(3), vec![0], vec![0], entries.to_vec())
    }

    #[test]
    fn div_takes_adjacent_minima() {
        assert_eq!(compress_div(&table(&[2, 3, 4, 5]), 2).unwrap().entries(), &[2, 4]);
    }

    #[test]
    fn mod_takes_strided_minima() {
        assert_eq!(compress_mod(&table(&[2, 3, 4, 5]), 2).unwrap().entries(), &[2, 3]);
    }

    #[test]
    fn factor_one_is_identity() {
        let t = table(&[4, 0, 7, 1, 3]);
        assert_eq!(compress_div(&t, 1).unwrap().entries(), t.entries());
        assert_eq!(compress_mod(&t, 1).unwrap().entries(), t.entries());
    }

    #[test]
    fn full_factor_collapses_to_global_minimum() {
        let t = table(&[4, 0, 7, 1, 3]);
        assert_eq!(compress_div(&t, 5).unwrap().entries(), &[0]);
        assert_eq!(compress_mod(&t, 5).unwrap().entries(), &[0]);
    }

    #[test]
    fn ragged_mod_groups() {
        // m = 5, k = 2: stride 3, groups {0,3}, {1,4}, {2}
        assert_eq!(compress_entries(&[4, 0, 7, 1, 3], 2, CompressionMode::Mod).unwrap(), [1, 0, 7]);
        assert_eq!(compress_entries(&[4, 0, 7, 1, 3], 2, CompressionMode::Div).unwrap(), [0, 1, 3]);
    }

    #[test]
    fn zero_factor_rejected() {
        assert_eq!(compress_div(&table(&[1]), 0).unwrap_err(), HeuristicError::ZeroFactor);
    }
}
