use std::fmt::Debug;
use std::thread;
use std::time::Duration;

use batchida_core::{
    ensemble_min, quantile_class, ClassDistribution, Cost, FeatureVector, HeuristicError, HeuristicSource,
    PatternSpace,
};

/// A batched heuristic function. Values depend only on each feature vector,
/// never on what else is in the batch.
pub trait BatchEvaluator: Send + Sync + Debug {
    /// Appends one value per entry of `batch` to `out`, in order.
    fn evaluate(&self, batch: &[FeatureVector], out: &mut Vec<Cost>);

    fn name(&self) -> &'static str;
}

/// Simulated transfer and compute cost of one evaluator call.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Latency {
    pub per_call: Duration,
    pub per_item: Duration,
}

impl Latency {
    pub const ZERO: Latency = Latency { per_call: Duration::ZERO, per_item: Duration::ZERO };

    pub fn for_batch(&self, items: usize) -> Duration {
        self.per_call + self.per_item * items as u32
    }
}

/// Answers from an exact heuristic table, then sleeps for the configured
/// latency before returning.
#[derive(Debug)]
pub struct TableSim<D> {
    domain: D,
    source: HeuristicSource,
    latency: Latency,
}

impl<D: PatternSpace + Debug> TableSim<D> {
    pub fn new(domain: D, source: HeuristicSource, latency: Latency) -> Result<Self, HeuristicError> {
        source.validate_for(&domain)?;
        Ok(Self { domain, source, latency })
    }

    pub fn latency(&self) -> Latency {
        self.latency
    }
}

impl<D: PatternSpace + Debug> BatchEvaluator for TableSim<D> {
    fn evaluate(&self, batch: &[FeatureVector], out: &mut Vec<Cost>) {
        out.extend(batch.iter().map(|fv| {
            let state = self.domain.decode_features(fv).expect("features produced by this domain");
            self.source.lookup(&self.domain, &state)
        }));
        let pause = self.latency.for_batch(batch.len());
        if !pause.is_zero() {
            thread::sleep(pause);
        }
    }

    fn name(&self) -> &'static str {
        "table_sim"
    }
}

/// An ensemble of linear scorers over one-hot features. Each member maps a
/// state to class logits, the softmax is cut at quantile `q`, and the
/// smallest class across members is the heuristic value.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    feature_len: usize,
    classes: usize,
    /// One `classes x feature_len` row-major matrix per member.
    members: Vec<Vec<f32>>,
    quantile: f64,
}

impl LinearModel {
    pub fn new(feature_len: usize, classes: usize, members: Vec<Vec<f32>>, quantile: f64) -> Result<Self, HeuristicError> {
        if feature_len == 0 || classes == 0 {
            return Err(HeuristicError::InvalidArgument("feature length and class count must be positive"));
        }
        if members.is_empty() {
            return Err(HeuristicError::EmptyEnsemble);
        }
        if members.iter().any(|m| m.len() != feature_len * classes) {
            return Err(HeuristicError::InvalidArgument("weight matrix size does not match feature length x classes"));
        }
        if !(quantile > 0.0 && quantile <= 1.0) {
            return Err(HeuristicError::BadQuantile(quantile));
        }
        Ok(Self { feature_len, classes, members, quantile })
    }

    pub fn feature_len(&self) -> usize {
        self.feature_len
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn members(&self) -> &[Vec<f32>] {
        &self.members
    }

    pub fn quantile(&self) -> f64 {
        self.quantile
    }

    pub fn with_quantile(mut self, quantile: f64) -> Result<Self, HeuristicError> {
        if !(quantile > 0.0 && quantile <= 1.0) {
            return Err(HeuristicError::BadQuantile(quantile));
        }
        self.quantile = quantile;
        Ok(self)
    }

    /// Class distribution of one member for one state.
    pub fn distribution(&self, member: usize, fv: &FeatureVector) -> ClassDistribution {
        let w = &self.members[member];
        let logits: Vec<f64> = (0..self.classes)
            .map(|c| {
                let row = &w[c * self.feature_len..(c + 1) * self.feature_len];
                fv.hot.iter().map(|&i| row[i as usize] as f64).sum()
            })
            .collect();
        ClassDistribution::new(softmax(&logits)).expect("softmax output is normalized")
    }

    pub fn score(&self, fv: &FeatureVector) -> Cost {
        assert_eq!(fv.len as usize, self.feature_len, "feature vector length does not match the model");
        let estimates: Vec<Cost> = (0..self.members.len())
            .map(|m| quantile_class(&self.distribution(m, fv), self.quantile).expect("quantile checked at construction"))
            .collect();
        ensemble_min(&estimates).expect("ensemble is nonempty")
    }
}

impl BatchEvaluator for LinearModel {
    fn evaluate(&self, batch: &[FeatureVector], out: &mut Vec<Cost>) {
        out.extend(batch.iter().map(|fv| self.score(fv)));
    }

    fn name(&self) -> &'static str {
        "linear_model"
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
