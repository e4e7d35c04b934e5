use crate::error::{structural, Error, Result};
use crate::process::ProcessSpec;

/// Tolerance on the total mass of a distribution.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// A probability distribution over complete outcome tuples, stored densely in
/// lexicographic order (first stage most significant).
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    alphabet_sizes: Vec<usize>,
    probs: Vec<f64>,
}

impl JointDistribution {
    pub fn new(alphabet_sizes: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        let expected: usize = alphabet_sizes.iter().product();
        if alphabet_sizes.is_empty() || probs.len() != expected {
            return Err(structural(format!(
                "distribution has {} entries, alphabets {alphabet_sizes:?} need {expected}",
                probs.len()
            )));
        }
        if let Some((index, &value)) = probs.iter().enumerate().find(|(_, p)| !p.is_finite() || **p < 0.0) {
            return Err(Error::NegativeProbability { index, value });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized { sum });
        }
        Ok(Self { alphabet_sizes, probs })
    }

    /// Divides nonnegative weights by their total.
    pub fn from_weights(alphabet_sizes: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(structural("weights must have positive total"));
        }
        Self::new(alphabet_sizes, weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(alphabet_sizes: Vec<usize>) -> Self {
        let n: usize = alphabet_sizes.iter().product();
        Self {
            alphabet_sizes,
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(proc: &ProcessSpec, outcome: &[usize]) -> Self {
        let mut probs = vec![0.0; proc.outcome_count()];
        probs[proc.encode(outcome)] = 1.0;
        Self {
            alphabet_sizes: proc.alphabet_sizes().to_vec(),
            probs,
        }
    }

    pub fn alphabet_sizes(&self) -> &[usize] {
        &self.alphabet_sizes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, index: usize) -> f64 {
        self.probs[index]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        max_abs_diff(&self.probs, &other.probs)
    }

    /// Fails unless the alphabets agree with `proc`.
    pub fn check_against(&self, proc: &ProcessSpec) -> Result<()> {
        if self.alphabet_sizes != proc.alphabet_sizes() {
            return Err(structural(format!(
                "distribution alphabets {:?} do not match process alphabets {:?}",
                self.alphabet_sizes,
                proc.alphabet_sizes()
            )));
        }
        Ok(())
    }
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
