use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ROW_TOL;

/// Probability mass function over `0..len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Pmf(Vec<f64>);

impl Pmf {
    /// Checked constructor: non-negative, sums to 1 within tolerance.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument("pmf entries must be finite and non-negative".into()));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > ROW_TOL {
            return Err(Error::InvalidArgument(format!("pmf sums to {s}")));
        }
        Ok(Self(weights))
    }

    /// Normalize non-negative weights; zero mass is impossible evidence.
    pub fn from_weights(weights: Vec<f64>, what: &str) -> Result<Self> {
        let s: f64 = weights.iter().sum();
        if s.is_nan() || s <= 0.0 {
            return Err(Error::ImpossibleEvidence(what.to_string()));
        }
        Ok(Self(weights.into_iter().map(|w| w / s).collect()))
    }

    pub fn point(len: usize, at: usize) -> Self {
        let mut w = vec![0.0; len];
        w[at] = 1.0;
        Self(w)
    }

    pub fn uniform(len: usize) -> Self {
        Self(vec![1.0 / len as f64; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn linf(&self, other: &Pmf) -> f64 {
        linf(&self.0, &other.0)
    }

    pub fn is_point_mass(&self) -> bool {
        self.0.iter().filter(|&&w| w > 0.0).count() == 1
    }
}

impl std::ops::Index<usize> for Pmf {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| (a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max)
}
