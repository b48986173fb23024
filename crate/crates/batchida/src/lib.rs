//! Batch IDA* and friends: parallel cost-bounded DFS whose heuristic
//! evaluations are deferred into batches served by pluggable evaluators.

pub mod algorithms;
pub mod bench;
pub mod cbdfs;
pub mod eval;
pub mod formats;
pub mod suites;

pub use batchida_core as core;
