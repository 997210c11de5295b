use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::global::{enumerate_global_optimum, GAP_TOL};
use super::search::{general_candidates, SearchBudget};
use crate::engine::{expected_distortion_exact_with, PrefixTree, SystemAssembly};
use crate::error::Result;
use crate::model::Instance;
use crate::policies::{randomize_encoder, EncoderPolicy, GeneralEncoder};

pub const LINEARITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomizationReport {
    pub strategies: usize,
    pub deterministic_min: f64,
    pub mixtures: usize,
    pub min_mixture_cost: f64,
    /// Smallest `mixture cost - deterministic minimum` over sampled mixtures.
    pub min_margin: f64,
    /// Largest `|mixture cost - Σ weight · component cost|`.
    pub max_linearity_error: f64,
    pub uniform_mixture_cost: f64,
    pub uniform_average: f64,
    pub point_mass_cost: f64,
    pub pass: bool,
}

/// Randomize encoder 1 while every other rule stays at the global optimum and
/// check that no mixture beats the best deterministic strategy.
pub fn verify_no_randomization_gain(inst: &Instance, mixtures: usize, seed: u64, budget: &SearchBudget) -> Result<RandomizationReport> {
    let opt = enumerate_global_optimum(inst, budget)?;
    let base = opt.witness;
    let tree = PrefixTree::build(inst, 0);
    let rule0 = base.receiver.memory_rules.first().cloned();
    let cands = general_candidates(inst, &tree, &[rule0], budget.max_strategies)?;
    let encs: Vec<GeneralEncoder> = cands.iter().map(|c| tree.general_encoder(&c.outputs)).collect();
    let with = |p: EncoderPolicy| -> SystemAssembly {
        let mut a = base.clone();
        a.encoders[0] = p;
        a
    };
    let costs = encs.iter().map(|e| Ok(expected_distortion_exact_with(&with(EncoderPolicy::General(e.clone())), budget.max_atoms)?.total)).collect::<Result<Vec<f64>>>()?;
    let (best_k, det_min) = costs.iter().copied().enumerate().fold((0, f64::INFINITY), |acc, (k, c)| if c < acc.1 { (k, c) } else { acc });
    let mix_cost = |parts: &[(usize, f64)]| -> Result<(f64, f64)> {
        let r = randomize_encoder(parts.iter().map(|&(k, w)| (encs[k].clone(), w)).collect())?;
        let c = expected_distortion_exact_with(&with(EncoderPolicy::Randomized(r)), budget.max_atoms)?.total;
        let lin: f64 = parts.iter().map(|&(k, w)| w * costs[k]).sum();
        Ok((c, lin))
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut min_mix, mut min_margin, mut max_lin) = (f64::INFINITY, f64::INFINITY, 0.0f64);
    for _ in 0..mixtures {
        let size = rng.random_range(1..=encs.len().min(8));
        let mut picks: Vec<usize> = Vec::with_capacity(size);
        while picks.len() < size {
            let k = rng.random_range(0..encs.len());
            if !picks.contains(&k) {
                picks.push(k);
            }
        }
        let raw: Vec<f64> = (0..size).map(|_| rng.random_range(0.05..1.0)).collect();
        let s: f64 = raw.iter().sum();
        let parts: Vec<(usize, f64)> = picks.into_iter().zip(raw.iter().map(|w| w / s)).collect();
        let (c, lin) = mix_cost(&parts)?;
        min_mix = min_mix.min(c);
        min_margin = min_margin.min(c - det_min);
        max_lin = max_lin.max((c - lin).abs());
    }
    let u = 1.0 / encs.len() as f64;
    let uniform: Vec<(usize, f64)> = (0..encs.len()).map(|k| (k, u)).collect();
    let (uc, ua) = mix_cost(&uniform)?;
    max_lin = max_lin.max((uc - ua).abs());
    let (pc, _) = mix_cost(&[(best_k, 1.0)])?;
    let pass = min_margin >= -GAP_TOL && (uc - det_min) >= -GAP_TOL && max_lin <= LINEARITY_TOL && (pc - det_min).abs() <= LINEARITY_TOL;
    Ok(RandomizationReport {
        strategies: encs.len(),
        deterministic_min: det_min,
        mixtures,
        min_mixture_cost: min_mix,
        min_margin,
        max_linearity_error: max_lin,
        uniform_mixture_cost: uc,
        uniform_average: ua,
        point_mass_cost: pc,
        pass,
    })
}
