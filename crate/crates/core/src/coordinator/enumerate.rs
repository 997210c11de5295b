//! Exhaustive enumeration of the two equivalent strategy classes for one
//! encoder in the noiseless setting: encoders that see their own symbol,
//! their belief about the latent variable and the shared symbol history, and
//! coordinator rules that pick a partial encoder from the shared history.

use serde::{Deserialize, Serialize};

use super::dp::{coordinator_to_structured, extract_selection_rule, solve_dp, ValueTable};
use super::graph::{build_reachable_xi_graph, check_p2, ReachableXiGraph};
use crate::beliefs::{predict_xi, condition_xi, coordinator_stage_cost, CanonicalBeliefSet, SideForward, XiState};
use crate::engine::{encoder_marginals, expected_distortion_exact_with, policy_marginals, stage_cost, CellRule, EncoderMarginals, PrefixTree, StageMarginal, SystemAssembly};
use crate::error::{Error, Result};
use crate::model::{Instance, ReceiverSpec};
use crate::oracle::search::node_belief_ids;
use crate::oracle::{SearchBudget, GAP_TOL};
use crate::policies::{CommonInfoEncoder, Decoder, EncoderPolicy, HistoryRule, MarkovRule, PartialEncoder, Table, XiStructuredEncoder};

/// Tolerance for matching two exact evaluations of the same strategy.
pub const EQUIV_TOL: f64 = 1e-12;

/// Prefix tree of the target encoder with belief ids on every node.
pub struct TargetTree {
    pub tree: PrefixTree,
    pub bids: Vec<Vec<usize>>,
    pub b_set: CanonicalBeliefSet,
}

impl TargetTree {
    pub fn build(inst: &Instance, target: usize, b_set: &CanonicalBeliefSet) -> Result<Self> {
        let tree = PrefixTree::build(inst, target);
        let mut set = b_set.clone();
        let bids = node_belief_ids(inst, &tree, &mut set)?;
        Ok(Self { tree, bids, b_set: set })
    }

    /// Encoder table implied by per-node outputs.
    pub fn common_info_encoder(&self, outputs: &[Vec<usize>]) -> Result<CommonInfoEncoder> {
        let hists = self.tree.symbol_histories(outputs);
        let mut stages = Vec::with_capacity(outputs.len());
        for (t, nodes) in self.tree.stages.iter().enumerate() {
            let mut tab: Table<(usize, usize, Vec<usize>), usize> = Table::default();
            for (k, n) in nodes.iter().enumerate() {
                let key = (*n.xs.last().unwrap(), self.bids[t][k], hists[t][k][..t].to_vec());
                if let Some(&prev) = tab.get(&key) {
                    if prev != outputs[t][k] {
                        return Err(Error::InvalidArgument(format!("outputs not a function of {key:?}")));
                    }
                }
                tab.insert(key, outputs[t][k]);
            }
            stages.push(tab);
        }
        Ok(CommonInfoEncoder { b_set: self.b_set.clone(), stages })
    }
}

/// Visit every encoder of the form `z_t = f_t(x_t, b_t, z_{1:t-1})`
/// restricted to reachable arguments, as per-node outputs. Returns the count.
pub fn for_each_common_info_strategy(
    inst: &Instance,
    tt: &TargetTree,
    limit: u128,
    f: &mut dyn FnMut(&[Vec<usize>]) -> Result<()>,
) -> Result<u128> {
    let mut count = 0u128;
    let mut prefix = Vec::new();
    let hists0 = vec![Vec::new(); tt.tree.stages.first().map_or(0, Vec::len)];
    common_dfs(inst, tt, 0, hists0, &mut prefix, &mut count, limit, f)?;
    Ok(count)
}

#[allow(clippy::too_many_arguments)]
fn common_dfs(
    inst: &Instance,
    tt: &TargetTree,
    t: usize,
    hists: Vec<Vec<usize>>,
    prefix: &mut Vec<Vec<usize>>,
    count: &mut u128,
    limit: u128,
    f: &mut dyn FnMut(&[Vec<usize>]) -> Result<()>,
) -> Result<()> {
    if t == tt.tree.stages.len() {
        *count += 1;
        if *count > limit {
            return Err(Error::BudgetExceeded { what: "common-information strategies", count: *count, limit });
        }
        return f(prefix);
    }
    let nodes = &tt.tree.stages[t];
    let mut keys: Vec<(usize, usize, &Vec<usize>)> = Vec::new();
    let node_keys: Vec<usize> = nodes
        .iter()
        .enumerate()
        .map(|(k, n)| {
            let key = (*n.xs.last().unwrap(), tt.bids[t][k], &hists[k]);
            keys.iter().position(|q| *q == key).unwrap_or_else(|| {
                keys.push(key);
                keys.len() - 1
            })
        })
        .collect();
    let zs = inst.z_size(tt.tree.encoder);
    let combos = (zs as u128).checked_pow(keys.len() as u32).unwrap_or(u128::MAX);
    if combos > limit {
        return Err(Error::BudgetExceeded { what: "common-information strategies", count: combos, limit });
    }
    for code in 0..combos {
        let mut assign = vec![0; keys.len()];
        let mut c = code;
        for slot in assign.iter_mut().rev() {
            *slot = (c % zs as u128) as usize;
            c /= zs as u128;
        }
        let outputs: Vec<usize> = node_keys.iter().map(|&k| assign[k]).collect();
        let next_hists = match tt.tree.stages.get(t + 1) {
            Some(next) => next
                .iter()
                .map(|n| {
                    let mut h = hists[n.parent].clone();
                    h.push(outputs[n.parent]);
                    h
                })
                .collect(),
            None => Vec::new(),
        };
        prefix.push(outputs);
        common_dfs(inst, tt, t + 1, next_hists, prefix, count, limit, f)?;
        prefix.pop();
    }
    Ok(())
}

/// Exact cost with the posterior-optimal decoder, from precomputed marginals
/// of the fixed encoders and the target's own marginals.
pub fn tau_cost(inst: &Instance, margs: &[&EncoderMarginals]) -> Result<f64> {
    let mut total = 0.0;
    for t in 1..=inst.horizon() {
        let sm: Vec<&StageMarginal> = margs.iter().map(|m| &m.stages[t - 1]).collect();
        total += stage_cost(inst, t, &sm, &CellRule::Tau, None)?;
    }
    Ok(total)
}

/// Marginals of every non-target encoder.
pub fn fixed_marginals(inst: &Instance, policies: &[EncoderPolicy], receiver: &ReceiverSpec, target: usize) -> Result<Vec<Option<EncoderMarginals>>> {
    (0..inst.n())
        .map(|j| if j == target { Ok(None) } else { policy_marginals(inst, receiver, &policies[j], &PrefixTree::build(inst, j)).map(Some) })
        .collect()
}

fn cost_with_target(inst: &Instance, fixed: &[Option<EncoderMarginals>], own: &EncoderMarginals) -> Result<f64> {
    let all: Vec<&EncoderMarginals> = fixed.iter().map(|m| m.as_ref().unwrap_or(own)).collect();
    tau_cost(inst, &all)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct P2BruteForce {
    pub min_cost: f64,
    pub strategies: u128,
    pub best: CommonInfoEncoder,
}

/// Minimum over all common-information strategies of the target encoder,
/// the others fixed, posterior-optimal decoder. Ties keep the first found.
pub fn p2_brute_force(inst: &Instance, policies: &[EncoderPolicy], receiver: &ReceiverSpec, target: usize, budget: &SearchBudget) -> Result<P2BruteForce> {
    check_p2(inst, receiver, target)?;
    let b_set = super::graph::reachable_a_beliefs(inst, target, None)?;
    let tt = TargetTree::build(inst, target, &b_set)?;
    let fixed = fixed_marginals(inst, policies, receiver, target)?;
    let mut best: Option<(f64, Vec<Vec<usize>>)> = None;
    let strategies = for_each_common_info_strategy(inst, &tt, budget.max_strategies, &mut |outs| {
        let own = encoder_marginals(inst, receiver, &tt.tree, outs);
        let c = cost_with_target(inst, &fixed, &own)?;
        if best.as_ref().is_none_or(|b| c < b.0) {
            best = Some((c, outs.to_vec()));
        }
        Ok(())
    })?;
    let (min_cost, outs) = best.ok_or_else(|| Error::InvalidArgument("no strategies".into()))?;
    Ok(P2BruteForce { min_cost, strategies, best: tt.common_info_encoder(&outs)? })
}

/// Expected cost of a history-form coordinator rule computed on the
/// coordinator's side: the information state is propagated along every
/// shared history and charged its stage cost.
pub fn history_rule_cost(inst: &Instance, side: &SideForward, rule: &HistoryRule, target: usize) -> Result<f64> {
    let mut beliefs = rule.b_set.clone();
    let mut frontier: Vec<(Vec<usize>, XiState, f64)> = vec![(Vec::new(), XiState::Empty, 1.0)];
    let mut total = 0.0;
    for t in 1..=inst.horizon() {
        let mut next = Vec::new();
        for (hist, xi, p) in frontier {
            let pred = predict_xi(&xi, inst, target, t, &mut beliefs)?;
            let w = rule.stages[t - 1].get(&hist).ok_or_else(|| Error::MissingEntry(format!("rule undefined at stage {t} for {hist:?}")))?;
            for z in 0..inst.z_size(target) {
                let q = pred.symbol_prob(w, z)?;
                if q > 0.0 {
                    let nxi = condition_xi(&pred, w, z)?;
                    total += p * q * coordinator_stage_cost(&nxi, t, side, inst, &beliefs);
                    let mut h = hist.clone();
                    h.push(z);
                    next.push((h, nxi, p * q));
                }
            }
        }
        frontier = next;
    }
    Ok(total)
}

/// Visit every history-form coordinator rule on the graph's action sets,
/// together with its expected cost accumulated along graph edges.
pub fn for_each_history_rule(graph: &ReachableXiGraph, limit: u128, f: &mut dyn FnMut(&HistoryRule, f64) -> Result<()>) -> Result<u128> {
    let mut count = 0u128;
    let mut stages = Vec::new();
    history_dfs(graph, 0, vec![(Vec::new(), 0, 1.0)], 0.0, &mut stages, &mut count, limit, f)?;
    Ok(count)
}

/// Number of history-form rules (product over reachable shared histories).
pub fn count_history_rules(graph: &ReachableXiGraph, limit: u128) -> Result<u128> {
    for_each_history_rule(graph, limit, &mut |_, _| Ok(()))
}

#[allow(clippy::too_many_arguments)]
fn history_dfs(
    graph: &ReachableXiGraph,
    t: usize,
    frontier: Vec<(Vec<usize>, usize, f64)>,
    cost: f64,
    stages: &mut Vec<Table<Vec<usize>, PartialEncoder>>,
    count: &mut u128,
    limit: u128,
    f: &mut dyn FnMut(&HistoryRule, f64) -> Result<()>,
) -> Result<()> {
    if t == graph.horizon() {
        *count += 1;
        if *count > limit {
            return Err(Error::BudgetExceeded { what: "coordinator history rules", count: *count, limit });
        }
        let rule = HistoryRule { b_set: graph.catalog.b_set.clone(), stages: stages.clone() };
        return f(&rule, cost);
    }
    let radices: Vec<usize> = frontier.iter().map(|(_, k, _)| graph.edges[t][*k].len()).collect();
    let mut digits = vec![0usize; frontier.len()];
    loop {
        let mut tab = Table::default();
        let mut next = Vec::new();
        let mut add = 0.0;
        for (slot, (hist, k, p)) in frontier.iter().enumerate() {
            let edge = &graph.edges[t][*k][digits[slot]];
            tab.insert(hist.clone(), graph.partial(t, *k, edge.w_id));
            for o in &edge.outcomes {
                let mut h = hist.clone();
                h.push(o.z);
                add += p * o.prob * graph.stage_costs[t + 1][o.to];
                next.push((h, o.to, p * o.prob));
            }
        }
        stages.push(tab);
        history_dfs(graph, t + 1, next, cost + add, stages, count, limit, f)?;
        stages.pop();
        // advance mixed-radix counter, last slot fastest
        let mut pos = digits.len();
        loop {
            if pos == 0 {
                return Ok(());
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < radices[pos] {
                break;
            }
            digits[pos] = 0;
        }
    }
}

fn exact_cost_of(inst: &Instance, policies: &[EncoderPolicy], receiver: &ReceiverSpec, target: usize, enc: EncoderPolicy, budget: &SearchBudget) -> Result<f64> {
    let mut encs = policies.to_vec();
    encs[target] = enc;
    let asm = SystemAssembly { instance: inst.clone(), encoders: encs, receiver: receiver.clone(), decoder: Decoder::Tau };
    Ok(expected_distortion_exact_with(&asm, budget.max_atoms)?.total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub encoder_strategies: u128,
    pub coordinator_rules: u128,
    /// Coordinator rule cost vs exact cost of the encoder it induces.
    pub max_gap_rule_to_encoder: f64,
    /// Exact encoder cost vs coordinator cost of the rule sliced from it.
    pub max_gap_encoder_to_rule: f64,
    /// Elementwise gap between the sorted cost lists.
    pub max_multiset_gap: f64,
    pub min_encoder_cost: f64,
    pub min_rule_cost: f64,
    pub pass: bool,
}

/// Both directions of the correspondence between the two strategy classes,
/// with exact costs compared pairwise and as sorted multisets.
pub fn verify_equivalence_p2(inst: &Instance, policies: &[EncoderPolicy], receiver: &ReceiverSpec, target: usize, budget: &SearchBudget) -> Result<EquivalenceReport> {
    let graph = build_reachable_xi_graph(inst, policies, receiver, target, budget, None)?;
    let side = SideForward::build(inst, policies, receiver, target)?;
    let tt = TargetTree::build(inst, target, &graph.catalog.b_set)?;
    let fixed = fixed_marginals(inst, policies, receiver, target)?;

    let mut enc_costs = Vec::new();
    let mut gap_er = 0.0f64;
    let encoder_strategies = for_each_common_info_strategy(inst, &tt, budget.max_strategies, &mut |outs| {
        let own = encoder_marginals(inst, receiver, &tt.tree, outs);
        let c = cost_with_target(inst, &fixed, &own)?;
        let rule = HistoryRule::from_encoder(&tt.common_info_encoder(outs)?);
        gap_er = gap_er.max((history_rule_cost(inst, &side, &rule, target)? - c).abs());
        enc_costs.push(c);
        Ok(())
    })?;

    let mut rule_costs = Vec::new();
    let mut gap_re = 0.0f64;
    let coordinator_rules = for_each_history_rule(&graph, budget.max_strategies, &mut |rule, c| {
        let exact = exact_cost_of(inst, policies, receiver, target, EncoderPolicy::CommonInfo(rule.to_encoder()), budget)?;
        gap_re = gap_re.max((exact - c).abs());
        rule_costs.push(c);
        Ok(())
    })?;

    enc_costs.sort_by(f64::total_cmp);
    rule_costs.sort_by(f64::total_cmp);
    let max_multiset_gap = if enc_costs.len() == rule_costs.len() {
        enc_costs.iter().zip(&rule_costs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let pass = gap_re <= EQUIV_TOL && gap_er <= EQUIV_TOL && max_multiset_gap <= EQUIV_TOL;
    Ok(EquivalenceReport {
        encoder_strategies,
        coordinator_rules,
        max_gap_rule_to_encoder: gap_re,
        max_gap_encoder_to_rule: gap_er,
        max_multiset_gap,
        min_encoder_cost: enc_costs.first().copied().unwrap_or(f64::NAN),
        min_rule_cost: rule_costs.first().copied().unwrap_or(f64::NAN),
        pass,
    })
}

/// Graph, value table, extracted rule and the encoder it yields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinatorSolution {
    pub graph: ReachableXiGraph,
    pub values: ValueTable,
    pub rule: MarkovRule,
    pub encoder: XiStructuredEncoder,
}

pub fn solve_coordinator(
    inst: &Instance,
    policies: &[EncoderPolicy],
    receiver: &ReceiverSpec,
    target: usize,
    budget: &SearchBudget,
    grid: Option<usize>,
) -> Result<CoordinatorSolution> {
    let graph = build_reachable_xi_graph(inst, policies, receiver, target, budget, grid)?;
    let values = solve_dp(&graph);
    let rule = extract_selection_rule(&values, &graph);
    let encoder = coordinator_to_structured(&rule, &graph)?;
    Ok(CoordinatorSolution { graph, values, rule, encoder })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub rules: u128,
    pub v0: f64,
    pub min_rule_cost: f64,
    pub extracted_cost: f64,
    /// Rules whose exact cost falls below the optimal value by more than the tolerance.
    pub violations: usize,
    pub pass: bool,
}

/// Every history-form rule, evaluated exactly through the encoder it
/// induces, costs at least the optimal value; the extracted rule attains it.
pub fn verify_dominance(inst: &Instance, policies: &[EncoderPolicy], receiver: &ReceiverSpec, target: usize, budget: &SearchBudget) -> Result<DominanceReport> {
    let sol = solve_coordinator(inst, policies, receiver, target, budget, None)?;
    let v0 = sol.values.v0;
    let mut min_rule_cost = f64::INFINITY;
    let mut violations = 0;
    let rules = for_each_history_rule(&sol.graph, budget.max_strategies, &mut |rule, _| {
        let c = exact_cost_of(inst, policies, receiver, target, EncoderPolicy::CommonInfo(rule.to_encoder()), budget)?;
        min_rule_cost = min_rule_cost.min(c);
        if v0 > c + GAP_TOL {
            violations += 1;
        }
        Ok(())
    })?;
    let extracted_cost = exact_cost_of(inst, policies, receiver, target, EncoderPolicy::XiStructured(sol.encoder.clone()), budget)?;
    let pass = violations == 0 && (extracted_cost - v0).abs() <= GAP_TOL && (min_rule_cost - v0).abs() <= GAP_TOL;
    Ok(DominanceReport { rules, v0, min_rule_cost, extracted_cost, violations, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepStep {
    pub target: usize,
    pub value: f64,
    pub exact_cost: f64,
}

/// Heuristic only: alternately re-optimize each encoder with the others
/// fixed until no step improves by more than `tol`. The result is a
/// person-by-person optimum at best; no global optimality is claimed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponseHeuristic {
    pub steps: Vec<SweepStep>,
    pub policies: Vec<EncoderPolicy>,
    pub final_cost: f64,
    pub converged: bool,
}

pub fn alternating_best_response(
    inst: &Instance,
    start: &[EncoderPolicy],
    receiver: &ReceiverSpec,
    budget: &SearchBudget,
    max_sweeps: usize,
    tol: f64,
) -> Result<BestResponseHeuristic> {
    let mut policies = start.to_vec();
    let mut current = exact_cost_of(inst, &policies, receiver, 0, policies[0].clone(), budget)?;
    let mut steps = Vec::new();
    let mut converged = false;
    for _ in 0..max_sweeps {
        let mut improved = false;
        for target in 0..inst.n() {
            let sol = solve_coordinator(inst, &policies, receiver, target, budget, None)?;
            let enc = EncoderPolicy::XiStructured(sol.encoder);
            let exact = exact_cost_of(inst, &policies, receiver, target, enc.clone(), budget)?;
            steps.push(SweepStep { target, value: sol.values.v0, exact_cost: exact });
            if exact < current - tol {
                improved = true;
                current = exact;
                policies[target] = enc;
            }
        }
        if !improved {
            converged = true;
            break;
        }
    }
    Ok(BestResponseHeuristic { steps, policies, final_cost: current, converged })
}
