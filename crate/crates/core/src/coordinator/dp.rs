use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::graph::ReachableXiGraph;
use crate::error::{Error, Result};
use crate::policies::{MarkovRule, Table, XiStructuredEncoder};

/// Ties between partial encoders closer than this keep the smaller id.
pub const DP_TIE_TOL: f64 = 1e-12;

/// `values[t][k]`: optimal cost-to-go from state `k` of stage `t`, including
/// the stage-`t` cost. `choice[t][k]`: minimizing partial-encoder id for stage `t + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueTable {
    pub values: Vec<Vec<f64>>,
    pub choice: Vec<Vec<u128>>,
    pub v0: f64,
}

fn expected_next(edge: &super::graph::XiEdge, next: &[f64]) -> f64 {
    edge.outcomes.iter().map(|o| o.prob * next[o.to]).sum()
}

/// Backward induction over the graph.
pub fn solve_dp(graph: &ReachableXiGraph) -> ValueTable {
    let horizon = graph.horizon();
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); horizon + 1];
    let mut choice: Vec<Vec<u128>> = vec![Vec::new(); horizon];
    values[horizon] = graph.stage_costs[horizon].clone();
    for t in (0..horizon).rev() {
        let next = &values[t + 1];
        let solved: Vec<(f64, u128)> = graph.edges[t]
            .par_iter()
            .enumerate()
            .map(|(k, edges)| {
                let mut best = (f64::INFINITY, 0u128);
                for e in edges {
                    let v = expected_next(e, next);
                    if v < best.0 - DP_TIE_TOL {
                        best = (v, e.w_id);
                    }
                }
                (graph.stage_costs[t][k] + best.0, best.1)
            })
            .collect();
        values[t] = solved.iter().map(|s| s.0).collect();
        choice[t] = solved.iter().map(|s| s.1).collect();
    }
    let v0 = values[0][0];
    ValueTable { values, choice, v0 }
}

/// Markov-form selection rule: stage `t` picks the stored minimizer for the
/// stage `t - 1` state.
pub fn extract_selection_rule(values: &ValueTable, graph: &ReachableXiGraph) -> MarkovRule {
    let stages = (0..graph.horizon())
        .map(|t| values.choice[t].iter().enumerate().map(|(k, &w)| (k, graph.partial(t, k, w))).collect())
        .collect();
    MarkovRule { stages }
}

/// Encoder keyed by `(x, b-id, previous state id)` whose state advances
/// along the graph edges of the chosen partial encoders.
pub fn coordinator_to_structured(rule: &MarkovRule, graph: &ReachableXiGraph) -> Result<XiStructuredEncoder> {
    let mut table = Vec::with_capacity(graph.horizon());
    let mut next = Vec::with_capacity(graph.horizon());
    for t in 0..graph.horizon() {
        let mut tab = Table::default();
        let mut nxt = Table::default();
        for (&k, w) in rule.stages[t].iter() {
            let pred = graph.predictions[t].get(k).ok_or_else(|| Error::MissingEntry(format!("no state {k} at stage {t}")))?;
            for e in &pred.support {
                let z = w.get(e.x, e.b).ok_or_else(|| Error::MissingEntry(format!("rule lacks ({}, {})", e.x, e.b)))?;
                tab.insert((e.x, e.b, k), z);
            }
            let w_id = super::graph::partial_id(pred, graph.z_size, w)?;
            let edge = graph.edges[t][k].iter().find(|e| e.w_id == w_id).ok_or_else(|| Error::MissingEntry(format!("no edge for action {w_id}")))?;
            for o in &edge.outcomes {
                nxt.insert((k, o.z), o.to);
            }
        }
        table.push(tab);
        next.push(nxt);
    }
    Ok(XiStructuredEncoder { catalog: Arc::clone(&graph.catalog), table, next })
}

/// Expected total cost of a Markov rule, walking the graph forward.
pub fn markov_rule_cost(rule: &MarkovRule, graph: &ReachableXiGraph) -> Result<f64> {
    let mut dist = vec![(0usize, 1.0f64)];
    let mut total = 0.0;
    for t in 0..graph.horizon() {
        let mut nd: Vec<f64> = vec![0.0; graph.catalog.stages[t + 1].len()];
        for &(k, p) in &dist {
            let w = rule.stages[t].get(&k).ok_or_else(|| Error::MissingEntry(format!("rule undefined at stage {} state {k}", t + 1)))?;
            let w_id = super::graph::partial_id(&graph.predictions[t][k], graph.z_size, w)?;
            let edge = &graph.edges[t][k][w_id as usize];
            for o in &edge.outcomes {
                nd[o.to] += p * o.prob;
            }
        }
        dist = nd.into_iter().enumerate().filter(|(_, p)| *p > 0.0).collect();
        total += dist.iter().map(|&(k, p)| p * graph.stage_costs[t + 1][k]).sum::<f64>();
    }
    Ok(total)
}
