use serde::{Deserialize, Serialize};

use super::a_belief::{init_a_belief, update_a_belief};
use super::canonical::CanonicalBeliefSet;
use super::pmf::Pmf;
use crate::error::{Error, Result};
use crate::model::Instance;
use crate::policies::PartialEncoder;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiEntry {
    pub x: usize,
    pub b: usize,
    pub p: f64,
}

/// Coordinator information state: distribution over `(x, belief-id)` pairs
/// given the common history, or the empty sentinel before stage 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XiState {
    Empty,
    Dist(Vec<XiEntry>),
}

impl XiState {
    pub fn entries(&self) -> &[XiEntry] {
        match self {
            XiState::Empty => &[],
            XiState::Dist(v) => v,
        }
    }

    pub fn prob(&self, x: usize, b: usize) -> f64 {
        self.entries().iter().find(|e| e.x == x && e.b == b).map_or(0.0, |e| e.p)
    }

    /// L∞ distance; the sentinel is infinitely far from any distribution.
    pub fn linf(&self, other: &XiState) -> f64 {
        match (self, other) {
            (XiState::Empty, XiState::Empty) => 0.0,
            (XiState::Dist(a), XiState::Dist(b)) => {
                let (mut i, mut j, mut d) = (0, 0, 0.0f64);
                while i < a.len() || j < b.len() {
                    let ka = a.get(i).map(|e| (e.x, e.b));
                    let kb = b.get(j).map(|e| (e.x, e.b));
                    match (ka, kb) {
                        (Some(x), Some(y)) if x == y => {
                            d = d.max((a[i].p - b[j].p).abs());
                            i += 1;
                            j += 1;
                        }
                        (Some(x), Some(y)) if x < y => {
                            d = d.max(a[i].p);
                            i += 1;
                        }
                        (Some(_), None) => {
                            d = d.max(a[i].p);
                            i += 1;
                        }
                        _ => {
                            d = d.max(b[j].p);
                            j += 1;
                        }
                    }
                }
                d
            }
            _ => f64::INFINITY,
        }
    }

    /// Marginal over the encoder's symbol and the latent variable:
    /// `sum_b b(a) xi(x, b)` indexed `[x][a]`.
    pub fn x_a_marginal(&self, x_size: usize, beliefs: &CanonicalBeliefSet) -> Vec<Vec<f64>> {
        let a_size = beliefs.iter().next().map_or(1, |b| b.len());
        let mut out = vec![vec![0.0; a_size]; x_size];
        for e in self.entries() {
            let b = beliefs.get(e.b);
            for a in 0..a_size {
                out[e.x][a] += e.p * b[a];
            }
        }
        out
    }
}

/// One-step predictive law of `(X_t, b_t)` before the symbol is observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiPrediction {
    pub stage: usize,
    pub support: Vec<XiEntry>,
}

fn merge_sorted(mut v: Vec<XiEntry>) -> Vec<XiEntry> {
    v.sort_by(|a, b| (a.x, a.b).cmp(&(b.x, b.b)));
    let mut out: Vec<XiEntry> = Vec::with_capacity(v.len());
    for e in v {
        match out.last_mut() {
            Some(l) if l.x == e.x && l.b == e.b => l.p += e.p,
            _ => out.push(e),
        }
    }
    out
}

/// Predictive support for stage `t` from the stage `t-1` state of encoder `i`.
/// New beliefs are interned into `beliefs`.
pub fn predict_xi(prev: &XiState, inst: &Instance, i: usize, t: usize, beliefs: &mut CanonicalBeliefSet) -> Result<XiPrediction> {
    let mut raw = Vec::new();
    match prev {
        XiState::Empty => {
            if t != 1 {
                return Err(Error::InvalidArgument("empty state only precedes stage 1".into()));
            }
            for x in 0..inst.x_size(i) {
                let w: f64 = inst.a_prior().iter().zip(inst.init(i)).map(|(p, r)| p * r[x]).sum();
                if w > 0.0 {
                    let b = beliefs.intern(&init_a_belief(inst, i, x)?);
                    raw.push(XiEntry { x, b, p: w });
                }
            }
        }
        XiState::Dist(entries) => {
            if t < 2 {
                return Err(Error::InvalidArgument("distribution states precede stages 2..".into()));
            }
            let ker = inst.kernel(i, t - 1);
            for e in entries {
                let prev_b = beliefs.get(e.b).clone();
                for x in 0..inst.x_size(i) {
                    let lik: f64 = (0..prev_b.len()).map(|a| prev_b[a] * ker[a][e.x][x]).sum();
                    let w = e.p * lik;
                    if w > 0.0 {
                        let nb = update_a_belief(&prev_b, e.x, x, ker)?;
                        let b = beliefs.intern(&nb);
                        raw.push(XiEntry { x, b, p: w });
                    }
                }
            }
        }
    }
    let support = merge_sorted(raw);
    let total: f64 = support.iter().map(|e| e.p).sum();
    if total <= 0.0 {
        return Err(Error::ImpossibleEvidence("empty predictive support".into()));
    }
    Ok(XiPrediction { stage: t, support: support.into_iter().map(|e| XiEntry { p: e.p / total, ..e }).collect() })
}

impl XiPrediction {
    /// Probability that `w` emits `z`.
    pub fn symbol_prob(&self, w: &PartialEncoder, z: usize) -> Result<f64> {
        let mut s = 0.0;
        for e in &self.support {
            let out = w.get(e.x, e.b).ok_or_else(|| Error::MissingEntry(format!("partial encoder has no entry for ({}, {})", e.x, e.b)))?;
            if out == z {
                s += e.p;
            }
        }
        Ok(s)
    }
}

/// Condition the predictive law on `w` having emitted `z`.
pub fn condition_xi(pred: &XiPrediction, w: &PartialEncoder, z: usize) -> Result<XiState> {
    let mut kept = Vec::new();
    for e in &pred.support {
        let out = w.get(e.x, e.b).ok_or_else(|| Error::MissingEntry(format!("partial encoder has no entry for ({}, {})", e.x, e.b)))?;
        if out == z {
            kept.push(*e);
        }
    }
    let total: f64 = kept.iter().map(|e| e.p).sum();
    if total <= 0.0 {
        return Err(Error::ImpossibleEvidence(format!("symbol {z} has zero probability")));
    }
    Ok(XiState::Dist(kept.into_iter().map(|e| XiEntry { p: e.p / total, ..e }).collect()))
}

/// Full update: predict through the source and belief recursion, then condition on `z`.
pub fn update_xi(prev: &XiState, z: usize, w: &PartialEncoder, inst: &Instance, i: usize, t: usize, beliefs: &mut CanonicalBeliefSet) -> Result<XiState> {
    condition_xi(&predict_xi(prev, inst, i, t, beliefs)?, w, z)
}

/// Convenience for tests: the sentinel-free normalized weights as a dense `Pmf`
/// over `x * n_beliefs + b`.
pub fn xi_dense(xi: &XiState, x_size: usize, n_beliefs: usize) -> Pmf {
    let mut w = vec![0.0; x_size * n_beliefs];
    for e in xi.entries() {
        w[e.x * n_beliefs + e.b] += e.p;
    }
    Pmf::from_weights(w, "empty state").unwrap_or_else(|_| Pmf::point(x_size * n_beliefs, 0))
}
