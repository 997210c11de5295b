use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::beliefs::{condition_xi, predict_xi, CanonicalBeliefSet, SideForward, XiPrediction, XiState, DEDUP_TOL};
use crate::engine::PrefixTree;
use crate::error::{Error, Result};
use crate::model::{Instance, MemoryMode, ReceiverSpec};
use crate::oracle::search::node_belief_ids;
use crate::oracle::SearchBudget;
use crate::policies::{EncoderPolicy, PartialEncoder, XiCatalog};

/// Every value of `P(A | x_{1:t})` over positive-probability prefixes of
/// encoder `i`, `t = 1..T`, deduplicated (optionally snapped to a grid).
pub fn reachable_a_beliefs(inst: &Instance, i: usize, grid: Option<usize>) -> Result<CanonicalBeliefSet> {
    let mut set = match grid {
        Some(r) => CanonicalBeliefSet::with_grid(r),
        None => CanonicalBeliefSet::new(),
    };
    node_belief_ids(inst, &PrefixTree::build(inst, i), &mut set)?;
    Ok(set)
}

/// Number of partial encoders on a support of `support` points.
pub fn action_count(z_size: usize, support: usize) -> u128 {
    (z_size as u128).checked_pow(support as u32).unwrap_or(u128::MAX)
}

/// Decode a partial-encoder id: the first support point is the most
/// significant digit, so id order is lexicographic order of the outputs.
pub fn partial_from_id(pred: &XiPrediction, z_size: usize, mut id: u128) -> PartialEncoder {
    let mut outs = vec![0; pred.support.len()];
    for slot in outs.iter_mut().rev() {
        *slot = (id % z_size as u128) as usize;
        id /= z_size as u128;
    }
    PartialEncoder::from_pairs(pred.support.iter().zip(outs).map(|(e, z)| ((e.x, e.b), z)))
}

/// Inverse of [`partial_from_id`] restricted to the support.
pub fn partial_id(pred: &XiPrediction, z_size: usize, w: &PartialEncoder) -> Result<u128> {
    let mut id = 0u128;
    for e in &pred.support {
        let z = w.get(e.x, e.b).ok_or_else(|| Error::MissingEntry(format!("partial encoder lacks ({}, {})", e.x, e.b)))?;
        id = id * z_size as u128 + z as u128;
    }
    Ok(id)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub z: usize,
    pub prob: f64,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiEdge {
    pub w_id: u128,
    pub outcomes: Vec<Outcome>,
}

/// Closure of the information-state recursion under every partial encoder.
/// `predictions[t][k]` and `edges[t][k]` belong to state `k` of stage `t`
/// and describe the move to stage `t + 1`; `stage_costs[t][k]` is the
/// expected distortion incurred at stage `t` from state `k` (zero at stage 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachableXiGraph {
    pub target: usize,
    pub z_size: usize,
    pub catalog: Arc<XiCatalog>,
    pub predictions: Vec<Vec<XiPrediction>>,
    pub edges: Vec<Vec<Vec<XiEdge>>>,
    pub stage_costs: Vec<Vec<f64>>,
}

impl ReachableXiGraph {
    pub fn horizon(&self) -> usize {
        self.catalog.stages.len() - 1
    }

    pub fn state_count(&self) -> usize {
        self.catalog.stages.iter().map(Vec::len).sum()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().flatten().map(Vec::len).sum()
    }

    pub fn partial(&self, t: usize, state: usize, w_id: u128) -> PartialEncoder {
        partial_from_id(&self.predictions[t][state], self.z_size, w_id)
    }
}

pub(crate) fn check_p2(inst: &Instance, receiver: &ReceiverSpec, target: usize) -> Result<()> {
    if target >= inst.n() {
        return Err(Error::InvalidArgument(format!("encoder {target} out of range")));
    }
    if receiver.mode != MemoryMode::Perfect || !(0..inst.n()).all(|j| inst.is_noiseless(j)) {
        return Err(Error::InvalidArgument("coordinator analysis needs perfect receiver memory and noiseless channels".into()));
    }
    Ok(())
}

fn find_or_push(states: &mut Vec<XiState>, xi: XiState) -> usize {
    match states.iter().position(|s| s.linf(&xi) <= DEDUP_TOL) {
        Some(k) => k,
        None => {
            states.push(xi);
            states.len() - 1
        }
    }
}

/// Breadth-first construction of the graph for encoder `target`, the other
/// encoders being fixed to `policies`. Stage costs are filled in as well.
pub fn build_reachable_xi_graph(
    inst: &Instance,
    policies: &[EncoderPolicy],
    receiver: &ReceiverSpec,
    target: usize,
    budget: &SearchBudget,
    grid: Option<usize>,
) -> Result<ReachableXiGraph> {
    check_p2(inst, receiver, target)?;
    let horizon = inst.horizon();
    let z_size = inst.z_size(target);
    let mut beliefs = reachable_a_beliefs(inst, target, grid)?;
    let mut stages: Vec<Vec<XiState>> = vec![vec![XiState::Empty]];
    let mut predictions = Vec::with_capacity(horizon);
    let mut edges = Vec::with_capacity(horizon);
    let mut total_actions = 0u128;
    for t in 1..=horizon {
        let mut next_states = Vec::new();
        let mut preds = Vec::with_capacity(stages[t - 1].len());
        let mut stage_edges = Vec::with_capacity(stages[t - 1].len());
        for prev in &stages[t - 1] {
            let pred = predict_xi(prev, inst, target, t, &mut beliefs)?;
            let count = action_count(z_size, pred.support.len());
            total_actions = total_actions.saturating_add(count);
            if total_actions > budget.max_strategies {
                return Err(Error::BudgetExceeded { what: "partial encoders", count: total_actions, limit: budget.max_strategies });
            }
            let mut out = Vec::with_capacity(count as usize);
            for w_id in 0..count {
                let w = partial_from_id(&pred, z_size, w_id);
                let mut outcomes = Vec::new();
                for z in 0..z_size {
                    let prob = pred.symbol_prob(&w, z)?;
                    if prob > 0.0 {
                        let to = find_or_push(&mut next_states, condition_xi(&pred, &w, z)?);
                        outcomes.push(Outcome { z, prob, to });
                    }
                }
                out.push(XiEdge { w_id, outcomes });
            }
            preds.push(pred);
            stage_edges.push(out);
        }
        predictions.push(preds);
        edges.push(stage_edges);
        stages.push(next_states);
    }
    let side = SideForward::build(inst, policies, receiver, target)?;
    let catalog = XiCatalog { b_set: beliefs, stages };
    let stage_costs = stage_costs(inst, &catalog, &side);
    Ok(ReachableXiGraph { target, z_size, catalog: Arc::new(catalog), predictions, edges, stage_costs })
}

fn stage_costs(inst: &Instance, catalog: &XiCatalog, side: &SideForward) -> Vec<Vec<f64>> {
    use rayon::prelude::*;
    catalog
        .stages
        .iter()
        .enumerate()
        .map(|(t, states)| {
            if t == 0 {
                vec![0.0; states.len()]
            } else {
                states.par_iter().map(|xi| crate::beliefs::coordinator_stage_cost(xi, t, side, inst, &catalog.b_set)).collect()
            }
        })
        .collect()
}
