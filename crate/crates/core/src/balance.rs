//! Cost balance between per-thread table lookups and batched evaluation.
//!
//! Processing `b_nn` nodes costs `b_nn * t_pdb / n` with `n` threads doing
//! immediate lookups, and `t_nn + 2 * t_copy` as one batched call. The
//! report says which side is slower and by how much.

use core::fmt;
use core::time::Duration;

use crate::error::HeuristicError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dominant {
    /// Immediate lookups take longer; batching wins.
    Lookups,
    /// The batched call takes longer; batching loses.
    Evaluator,
    Balanced,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BalanceReport {
    /// Seconds spent by `n` threads on `b_nn` immediate lookups.
    pub lookup_secs: f64,
    /// Seconds for one batched evaluation including both transfers.
    pub evaluator_secs: f64,
    /// `lookup_secs / evaluator_secs`.
    pub ratio: f64,
    pub dominant: Dominant,
}

const BALANCE_TOLERANCE: f64 = 1e-9;

pub fn predict_balance(
    b_nn: u64,
    n: u64,
    t_pdb: Duration,
    t_nn: Duration,
    t_copy: Duration,
) -> Result<BalanceReport, HeuristicError> {
    if b_nn == 0 || n == 0 {
        return Err(HeuristicError::InvalidArgument("batch size and thread count must be positive"));
    }
    let lookup_secs = b_nn as f64 * t_pdb.as_secs_f64() / n as f64;
    let evaluator_secs = t_nn.as_secs_f64() + 2.0 * t_copy.as_secs_f64();
    if evaluator_secs <= 0.0 || lookup_secs <= 0.0 {
        return Err(HeuristicError::InvalidArgument("both sides of the balance must take positive time"));
    }
    let ratio = lookup_secs / evaluator_secs;
    let dominant = if (ratio - 1.0).abs() <= BALANCE_TOLERANCE {
        Dominant::Balanced
    } else if ratio > 1.0 {
        Dominant::Lookups
    } else {
        Dominant::Evaluator
    };
    Ok(BalanceReport { lookup_secs, evaluator_secs, ratio, dominant })
}

impl fmt::Display for BalanceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = match self.dominant {
            Dominant::Lookups => "batched evaluation is faster",
            Dominant::Evaluator => "immediate lookups are faster",
            Dominant::Balanced => "balanced",
        };
        write!(
            f,
            "lookups {:.3} us | evaluator {:.3} us | ratio {:.4} | {}",
            self.lookup_secs * 1e6,
            self.evaluator_secs * 1e6,
            self.ratio,
            verdict
        )
    }
}
