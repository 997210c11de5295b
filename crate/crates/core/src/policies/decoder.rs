use serde::{Deserialize, Serialize};

use super::table::Table;
use crate::beliefs::Pmf;

/// Relative slack under which two expected costs count as tied.
pub const TIE_TOL: f64 = 1e-12;

/// Estimate minimizing posterior expected distortion; ties go to the smallest index.
/// `rho_t` is laid out `[state * est_size + estimate]`.
pub fn decode_tau(psi: &Pmf, rho_t: &[f64], est_size: usize) -> usize {
    let costs: Vec<f64> = (0..est_size)
        .map(|s| psi.as_slice().iter().enumerate().filter(|(_, p)| **p > 0.0).map(|(x, p)| p * rho_t[x * est_size + s]).sum())
        .collect();
    argmin_tied(&costs)
}

pub fn argmin_tied(costs: &[f64]) -> usize {
    let best = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let slack = TIE_TOL * best.abs().max(1.0);
    costs.iter().position(|&c| c <= best + slack).unwrap_or(0)
}

/// Explicit decoder: per stage, `(y-vector, m-vector) -> estimate`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoderTable {
    pub stages: Vec<Table<(Vec<usize>, Vec<usize>), usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decoder {
    /// Posterior-optimal rule computed from the receiver belief.
    Tau,
    Table(DecoderTable),
}
