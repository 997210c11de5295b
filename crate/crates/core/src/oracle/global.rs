use serde::{Deserialize, Serialize};

use super::search::*;
use crate::engine::{complete_decoder, expected_distortion_exact_with, PrefixTree, SystemAssembly};
use crate::error::Result;
use crate::model::{Instance, MemoryMode, MemoryRules};
use crate::policies::{Decoder, EncoderPolicy, PolicyFile};

pub const GAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerationCounts {
    pub memory_rules: Vec<u128>,
    pub strategies_per_encoder: Vec<u128>,
    pub combinations: u128,
}

#[derive(Debug, Clone)]
pub struct GlobalOptimum {
    pub cost: f64,
    /// Cost of the witness re-evaluated by the exact evaluator.
    pub witness_cost: f64,
    pub witness: SystemAssembly,
    /// Receiver inputs of the witness decoder filled with the default estimate.
    pub defaulted_decoder_entries: usize,
    pub counts: EnumerationCounts,
}

pub(crate) fn trees(inst: &Instance) -> Vec<PrefixTree> {
    (0..inst.n()).map(|i| PrefixTree::build(inst, i)).collect()
}

pub(crate) fn build_witness(
    inst: &Instance,
    cands: &[Vec<LocalCandidate>],
    picks: &[usize],
    encoders: Vec<EncoderPolicy>,
    decoder_tau: bool,
    budget: &SearchBudget,
) -> Result<(SystemAssembly, usize, f64)> {
    let chosen: Vec<&LocalCandidate> = (0..inst.n()).map(|i| &cands[i][picks[i]]).collect();
    let rules: Vec<Option<MemoryRules>> = chosen.iter().map(|c| c.rules.clone()).collect();
    let receiver = receiver_with(inst, &rules);
    let (decoder, defaulted) = if decoder_tau {
        (Decoder::Tau, 0)
    } else {
        let best = combo_decoder(inst, &chosen)?;
        let (full, added) = complete_decoder(inst, &receiver, &best, 0);
        (Decoder::Table(full), added)
    };
    let asm = SystemAssembly { instance: inst.clone(), encoders, receiver, decoder };
    let cost = expected_distortion_exact_with(&asm, budget.max_atoms)?.total;
    Ok((asm, defaulted, cost))
}

/// Exhaustive minimum over all deterministic encoders, memory rules and decoders.
/// Decoders are optimized input by input, which is exact because the cost is a
/// sum of independent per-input terms once everything else is fixed.
pub fn enumerate_global_optimum(inst: &Instance, budget: &SearchBudget) -> Result<GlobalOptimum> {
    let trees = trees(inst);
    let mut cands = Vec::new();
    let mut rule_counts = Vec::new();
    for (i, tree) in trees.iter().enumerate() {
        let count = memory_rule_count(inst, i);
        over_budget("memory rule tables", count, budget.max_strategies)?;
        let rules = enumerate_memory_rules(inst, i);
        rule_counts.push(rules.len() as u128);
        cands.push(general_candidates(inst, tree, &rules, budget.max_strategies)?);
    }
    let (best, total) = product_search(inst, &cands, budget)?;
    let encoders = (0..inst.n()).map(|i| EncoderPolicy::General(trees[i].general_encoder(&cands[i][best.picks[i]].outputs))).collect();
    let (witness, defaulted, witness_cost) = build_witness(inst, &cands, &best.picks, encoders, false, budget)?;
    Ok(GlobalOptimum {
        cost: best.cost,
        witness_cost,
        witness,
        defaulted_decoder_entries: defaulted,
        counts: EnumerationCounts { memory_rules: rule_counts, strategies_per_encoder: cands.iter().map(|c| c.len() as u128).collect(), combinations: total },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub global_min: f64,
    pub structured_min: f64,
    pub gap: f64,
    pub pass: bool,
    pub global_witness_cost: f64,
    pub structured_witness_cost: f64,
    pub global_counts: EnumerationCounts,
    pub structured_counts: EnumerationCounts,
    pub global_witness: PolicyFile,
    pub structured_witness: PolicyFile,
}

/// Compare the unrestricted optimum with the optimum over encoders that use only
/// `(x_t, b_t, μ_t)`, both with the best decoder.
pub fn verify_theorem1(inst: &Instance, budget: &SearchBudget) -> Result<StructureReport> {
    if inst.receiver.mode != MemoryMode::Finite {
        return Err(crate::Error::InvalidArgument("structure check needs finite receiver memory".into()));
    }
    let global = enumerate_global_optimum(inst, budget)?;
    let trees = trees(inst);
    let mut cands = Vec::new();
    let mut rule_counts = Vec::new();
    for (i, tree) in trees.iter().enumerate() {
        let rules = enumerate_memory_rules(inst, i);
        rule_counts.push(rules.len() as u128);
        cands.push(structured_candidates(inst, tree, &rules, budget.max_strategies)?);
    }
    let (best, total) = product_search(inst, &cands, budget)?;
    let encoders = (0..inst.n())
        .map(|i| {
            let c = &cands[i][best.picks[i]];
            let recv = single_receiver(inst, i, &c.rules);
            structured_from_outputs(inst, &recv, &trees[i], &c.outputs).map(EncoderPolicy::Structured)
        })
        .collect::<Result<Vec<_>>>()?;
    let (sw, _, sw_cost) = build_witness(inst, &cands, &best.picks, encoders, true, budget)?;
    let gap = best.cost - global.cost;
    Ok(StructureReport {
        global_min: global.cost,
        structured_min: best.cost,
        gap,
        pass: gap.abs() <= GAP_TOL,
        global_witness_cost: global.witness_cost,
        structured_witness_cost: sw_cost,
        global_counts: global.counts.clone(),
        structured_counts: EnumerationCounts { memory_rules: rule_counts, strategies_per_encoder: cands.iter().map(|c| c.len() as u128).collect(), combinations: total },
        global_witness: global.witness.policy_file(),
        structured_witness: sw.policy_file(),
    })
}
