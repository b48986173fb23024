use alloc::string::String;

use thiserror::Error;

use crate::domain::Action;

/// Contract violations on states, actions and patterns.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StateError {
    #[error("action {0:?} is not legal in this state")]
    IllegalAction(Action),
    #[error("label {label} is not present in the state (domain has {size} labels)")]
    LabelAbsent { label: u8, size: usize },
    #[error("label {0} appears more than once in the pattern")]
    DuplicateLabel(u8),
    #[error("pattern is empty")]
    EmptyPattern,
    #[error("index {index} out of range for abstract space of size {size}")]
    IndexOutOfRange { index: u64, size: u64 },
    #[error("invalid state: {0}")]
    Invalid(String),
    #[error("feature vector does not encode a state: {0}")]
    BadFeatures(String),
    #[error("unsupported puzzle size {0}")]
    UnsupportedSize(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HeuristicError {
    #[error("abstract space needs {required} entries, cap is {cap}")]
    TooLarge { required: u64, cap: u64 },
    #[error("compression factor must be at least 1")]
    ZeroFactor,
    #[error("quantile {0} outside (0, 1]")]
    BadQuantile(f64),
    #[error("class distribution is not normalized (sum {0})")]
    NotNormalized(f64),
    #[error("class distribution is empty or has a negative entry")]
    BadDistribution,
    #[error("ensemble is empty")]
    EmptyEnsemble,
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("heuristic does not apply to this domain: {0}")]
    WrongDomain(&'static str),
    #[error(transparent)]
    State(#[from] StateError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    /// Every reachable node was pruned without exceeding the bound, or
    /// the instance lies outside the goal's reachable component.
    #[error("search space exhausted without reaching the goal")]
    Exhausted,
    #[error("oracle memory cap of {cap} states exceeded")]
    MemoryCap { cap: usize },
    #[error("no work items after frontier generation at depth {0}")]
    NoWork(usize),
    #[error("evaluator shut down")]
    EvaluatorClosed,
    #[error("search stopped before completion")]
    Interrupted,
    #[error(transparent)]
    State(#[from] StateError),
}
