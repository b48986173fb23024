//! Admissible heuristics: pattern databases, their DIV/MOD compressions,
//! Manhattan distance, additive sums, and the quantile/ensemble wrappers
//! that turn classifier outputs into conservative estimates.

mod classifier;
mod compress;
mod pdb;
mod source;

pub use classifier::{ensemble_min, quantile_class, ClassDistribution};
pub use compress::{compress_div, compress_entries, compress_mod, CompressedPdb, CompressionMode};
pub use pdb::{build_pdb, PdbTable, DEFAULT_ENTRY_CAP, UNREACHED};
pub use source::HeuristicSource;
