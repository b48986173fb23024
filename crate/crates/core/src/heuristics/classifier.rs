use alloc::vec::Vec;

use crate::domain::Cost;
use crate::error::HeuristicError;

const NORMALIZATION_TOLERANCE: f64 = 1e-9;
const CUMULATIVE_SLACK: f64 = 1e-12;

/// Probabilities over ordered classes `0..C`, where class `c` stands for a
/// heuristic value of `c`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassDistribution {
    probs: Vec<f64>,
}

impl ClassDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self, HeuristicError> {
        if probs.is_empty() || probs.iter().any(|p| p.is_nan() || *p < 0.0) {
            return Err(HeuristicError::BadDistribution);
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(HeuristicError::NotNormalized(sum));
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Smallest class whose cumulative probability reaches `q`.
pub fn quantile_class(dist: &ClassDistribution, q: f64) -> Result<Cost, HeuristicError> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(HeuristicError::BadQuantile(q));
    }
    let mut cumulative = 0.0;
    let mut last_nonzero = 0;
    for (c, &p) in dist.probs.iter().enumerate() {
        cumulative += p;
        if p > 0.0 {
            last_nonzero = c;
        }
        if cumulative + CUMULATIVE_SLACK >= q {
            return Ok(c as Cost);
        }
    }
    Ok(last_nonzero as Cost)
}

pub fn ensemble_min(estimates: &[Cost]) -> Result<Cost, HeuristicError> {
    estimates.iter().copied().min().ok_or(HeuristicError::EmptyEnsemble)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(p: &[f64]) -> ClassDistribution {
        ClassDistribution::new(p.to_vec()).unwrap()
    }

    #[test]
    fn median_of_three_classes() {
        assert_eq!(quantile_class(&dist(&[0.2, 0.4, 0.4]), 0.5).unwrap(), 1);
    }

    #[test]
    fn full_quantile_is_largest_supported_class() {
        assert_eq!(quantile_class(&dist(&[0.2, 0.4, 0.4]), 1.0).unwrap(), 2);
        assert_eq!(quantile_class(&dist(&[0.5, 0.5, 0.0, 0.0]), 1.0).unwrap(), 1);
    }

    #[test]
    fn point_mass() {
        let d = dist(&[0.0, 0.0, 0.0, 1.0, 0.0]);
        for q in [0.01, 0.3, 0.5, 0.99, 1.0] {
            assert_eq!(quantile_class(&d, q).unwrap(), 3);
        }
    }

    #[test]
    fn bad_quantiles() {
        let d = dist(&[1.0]);
        assert!(quantile_class(&d, 0.0).is_err());
        assert!(quantile_class(&d, 1.5).is_err());
        assert!(quantile_class(&d, f64::NAN).is_err());
    }

    #[test]
    fn rejects_unnormalized() {
        assert!(matches!(ClassDistribution::new(std::vec![0.5, 0.4]), Err(HeuristicError::NotNormalized(_))));
        assert!(ClassDistribution::new(std::vec![1.5, -0.5]).is_err());
        assert!(ClassDistribution::new(std::vec![]).is_err());
    }

    #[test]
    fn ensemble_minimum() {
        assert_eq!(ensemble_min(&[3, 5, 4]).unwrap(), 3);
        assert_eq!(ensemble_min(&[7]).unwrap(), 7);
        assert_eq!(ensemble_min(&[]), Err(HeuristicError::EmptyEnsemble));
    }

    proptest::proptest! {
        #[test]
        fn quantile_is_monotone(raw in proptest::collection::vec(0.0f64..1.0, 1..12), q1 in 0.001f64..1.0, q2 in 0.001f64..1.0) {
            let total: f64 = raw.iter().sum();
            proptest::prop_assume!(total > 1e-6);
            let d = ClassDistribution::new(raw.iter().map(|p| p / total).collect()).unwrap();
            let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
            proptest::prop_assert!(quantile_class(&d, lo).unwrap() <= quantile_class(&d, hi).unwrap());
        }
    }
}
