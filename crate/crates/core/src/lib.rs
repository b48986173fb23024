//! Search domains, admissible heuristics and sequential reference searches
//! for batched iterative-deepening A*.
//!
//! Everything in this crate is pure computation over immutable values and
//! builds without `std`; threading, timing and file IO live in the
//! `batchida` crate.

#![no_std]
#![deny(missing_debug_implementations)]

extern crate alloc;

#[cfg(test)]
#[macro_use]
extern crate std;

pub mod balance;
pub mod cube;
pub mod domain;
pub mod error;
pub mod heuristics;
pub mod idastar;
pub mod instance;
pub mod metrics;
pub mod oracle;
pub mod rank;
pub mod stp;

pub use balance::{predict_balance, BalanceReport, Dominant};
pub use cube::{CubeState, RubiksCube};
pub use domain::{Action, ActionList, Cost, Domain, DomainTag, FeatureVector, PatternSpace};
pub use error::{HeuristicError, SearchError, StateError};
pub use heuristics::{
    build_pdb, compress_div, compress_mod, ensemble_min, quantile_class, ClassDistribution,
    CompressedPdb, CompressionMode, HeuristicSource, PdbTable,
};
pub use idastar::{idastar, idastar_by, IdaOptions, SearchResult};
pub use instance::{random_walk_instance, Instance};
pub use metrics::{IterationStats, OccupancyHistogram, SearchStats};
pub use oracle::{bfs_oracle, goal_distances};
pub use stp::{SlidingTile, TileState};
