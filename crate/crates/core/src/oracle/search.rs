//! Candidate generation and product search shared by the brute-force checks.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beliefs::{tracked_a_belief_of_path, update_memory_belief, CanonicalBeliefSet, MemoryBelief, StageRule};
use crate::engine::{encoder_marginals, stage_cost, CellRule, EncoderMarginals, PrefixTree, StageMarginal};
use crate::error::{Error, Result};
use crate::model::{Instance, MemoryMode, MemoryRules, ReceiverSpec, Staged};
use crate::policies::{DecoderTable, StructuredEncoder, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    /// Limit on the number of joint strategy combinations examined.
    pub max_strategies: u128,
    /// Limit on atoms per exact evaluation.
    pub max_atoms: u128,
    /// Advisory wall-clock limit in seconds (reported, not enforced).
    pub wall_clock_hint_s: u64,
    pub workers: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self { max_strategies: 10_000_000, max_atoms: crate::engine::DEFAULT_ATOM_BUDGET, wall_clock_hint_s: 600, workers: 1 }
    }
}

pub(crate) fn over_budget(what: &'static str, count: u128, limit: u128) -> Result<()> {
    if count > limit {
        Err(Error::BudgetExceeded { what, count, limit })
    } else {
        Ok(())
    }
}

/// One encoder's deterministic strategy together with its memory rule.
#[derive(Debug, Clone)]
pub struct LocalCandidate {
    pub rules: Option<MemoryRules>,
    pub outputs: Vec<Vec<usize>>,
    pub marginals: EncoderMarginals,
}

fn pow(b: usize, e: usize) -> u128 {
    (b as u128).saturating_pow(e as u32)
}

/// Number of distinct memory rule sets for encoder `i`.
pub fn memory_rule_count(inst: &Instance, i: usize) -> u128 {
    match inst.receiver.mode {
        MemoryMode::Perfect => 1,
        MemoryMode::Finite => {
            let (m, y) = (inst.alphabets.m_sizes[i], inst.y_size(i));
            pow(m, y).saturating_mul(pow(m, m * y).saturating_pow(inst.horizon().saturating_sub(2) as u32))
        }
    }
}

/// Every memory rule set for encoder `i` (full tables, stage by stage).
pub fn enumerate_memory_rules(inst: &Instance, i: usize) -> Vec<Option<MemoryRules>> {
    if inst.receiver.mode == MemoryMode::Perfect {
        return vec![None];
    }
    let (m, y) = (inst.alphabets.m_sizes[i], inst.y_size(i));
    let later_stages = inst.horizon().saturating_sub(2);
    let digits = y + later_stages * m * y;
    let total = pow(m, digits) as usize;
    (0..total)
        .map(|mut code| {
            let mut d = vec![0; digits];
            for slot in d.iter_mut().rev() {
                *slot = code % m;
                code /= m;
            }
            let first = d[..y].to_vec();
            let later = (0..later_stages)
                .map(|k| {
                    let base = y + k * m * y;
                    (0..m).map(|r| d[base + r * y..base + (r + 1) * y].to_vec()).collect()
                })
                .collect();
            Some(MemoryRules { first, later: Staged::Stages(later) })
        })
        .collect()
}

pub(crate) fn receiver_with(inst: &Instance, rules: &[Option<MemoryRules>]) -> ReceiverSpec {
    match inst.receiver.mode {
        MemoryMode::Perfect => inst.receiver.clone(),
        MemoryMode::Finite => ReceiverSpec { mode: MemoryMode::Finite, memory_rules: rules.iter().map(|r| r.clone().expect("finite rules")).collect() },
    }
}

/// Receiver spec where only encoder `i`'s rule matters.
pub(crate) fn single_receiver(inst: &Instance, i: usize, rule: &Option<MemoryRules>) -> ReceiverSpec {
    let mut r = inst.receiver.clone();
    if let Some(rule) = rule {
        r.memory_rules[i] = rule.clone();
    }
    r
}

/// Closed-form count of general strategies for one encoder and one rule.
pub fn general_count(inst: &Instance, tree: &PrefixTree) -> u128 {
    pow(inst.z_size(tree.encoder), tree.node_count())
}

/// All general strategies of encoder `i` for every memory rule.
pub fn general_candidates(inst: &Instance, tree: &PrefixTree, rules: &[Option<MemoryRules>], limit: u128) -> Result<Vec<LocalCandidate>> {
    let i = tree.encoder;
    let per_rule = general_count(inst, tree);
    over_budget("candidate strategies", per_rule.saturating_mul(rules.len() as u128), limit)?;
    let zs = inst.z_size(i);
    let sizes: Vec<usize> = tree.stages.iter().map(|s| s.len()).collect();
    let nodes = tree.node_count();
    let mut out = Vec::with_capacity(per_rule as usize * rules.len());
    for rule in rules {
        let receiver = single_receiver(inst, i, rule);
        for mut code in 0..per_rule as usize {
            let mut flat = vec![0; nodes];
            for slot in flat.iter_mut().rev() {
                *slot = code % zs;
                code /= zs;
            }
            let mut outputs = Vec::with_capacity(sizes.len());
            let mut off = 0;
            for &s in &sizes {
                outputs.push(flat[off..off + s].to_vec());
                off += s;
            }
            let marginals = encoder_marginals(inst, &receiver, tree, &outputs);
            out.push(LocalCandidate { rules: rule.clone(), outputs, marginals });
        }
    }
    Ok(out)
}

/// Belief ids of every tree node (projected recursion, interned in order).
pub fn node_belief_ids(inst: &Instance, tree: &PrefixTree, set: &mut CanonicalBeliefSet) -> Result<Vec<Vec<usize>>> {
    tree.stages
        .iter()
        .map(|st| st.iter().map(|n| Ok(set.intern(&tracked_a_belief_of_path(inst, tree.encoder, &n.xs, set)?))).collect())
        .collect()
}

/// All strategies of the form `z_t = f_t(x_t, b_t, μ_t)` for one rule, as node outputs.
pub fn structured_outputs(inst: &Instance, receiver: &ReceiverSpec, tree: &PrefixTree, limit: u128) -> Result<Vec<Vec<Vec<usize>>>> {
    let i = tree.encoder;
    let mut bset = CanonicalBeliefSet::new();
    let bids = node_belief_ids(inst, tree, &mut bset)?;
    let mut mset = CanonicalBeliefSet::new();
    let mut out = Vec::new();
    let init: Vec<MemoryBelief> = vec![MemoryBelief::initial(inst.alphabets.m_sizes[i]); tree.stages[0].len()];
    structured_dfs(inst, receiver, tree, &bids, &mut mset, 0, init, &mut Vec::new(), &mut out, limit)?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn structured_dfs(
    inst: &Instance,
    receiver: &ReceiverSpec,
    tree: &PrefixTree,
    bids: &[Vec<usize>],
    mset: &mut CanonicalBeliefSet,
    t: usize,
    mus: Vec<MemoryBelief>,
    prefix: &mut Vec<Vec<usize>>,
    out: &mut Vec<Vec<Vec<usize>>>,
    limit: u128,
) -> Result<()> {
    if t == tree.stages.len() {
        over_budget("structured strategies", out.len() as u128 + 1, limit)?;
        out.push(prefix.clone());
        return Ok(());
    }
    let i = tree.encoder;
    let mut keys: Vec<(usize, usize, usize)> = Vec::new();
    let node_keys: Vec<usize> = tree.stages[t]
        .iter()
        .enumerate()
        .map(|(k, n)| {
            let key = (*n.xs.last().unwrap(), bids[t][k], mset.intern(mus[k].pmf()));
            match keys.iter().position(|&q| q == key) {
                Some(p) => p,
                None => {
                    keys.push(key);
                    keys.len() - 1
                }
            }
        })
        .collect();
    let zs = inst.z_size(i);
    let count = pow(zs, keys.len());
    over_budget("structured strategies", count, limit)?;
    for mut code in 0..count as usize {
        let mut assign = vec![0; keys.len()];
        for slot in assign.iter_mut().rev() {
            *slot = code % zs;
            code /= zs;
        }
        let outputs: Vec<usize> = node_keys.iter().map(|&k| assign[k]).collect();
        let next_mus = if t + 1 < tree.stages.len() {
            let rule = StageRule::of(receiver, i, t + 1)?;
            tree.stages[t + 1]
                .iter()
                .map(|n| update_memory_belief(&mus[n.parent], outputs[n.parent], inst.channel(i, t + 1), rule))
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        prefix.push(outputs);
        structured_dfs(inst, receiver, tree, bids, mset, t + 1, next_mus, prefix, out, limit)?;
        prefix.pop();
    }
    Ok(())
}

/// Structured candidates for every memory rule.
pub fn structured_candidates(inst: &Instance, tree: &PrefixTree, rules: &[Option<MemoryRules>], limit: u128) -> Result<Vec<LocalCandidate>> {
    let i = tree.encoder;
    if inst.receiver.mode != MemoryMode::Finite {
        return Err(Error::InvalidArgument("structured class is defined for finite receiver memory".into()));
    }
    let mut out = Vec::new();
    for rule in rules {
        let receiver = single_receiver(inst, i, rule);
        for outputs in structured_outputs(inst, &receiver, tree, limit)? {
            let marginals = encoder_marginals(inst, &receiver, tree, &outputs);
            out.push(LocalCandidate { rules: rule.clone(), outputs, marginals });
        }
    }
    over_budget("candidate strategies", out.len() as u128, limit)?;
    Ok(out)
}

/// Express node outputs as a structured table; fails if two nodes with the
/// same `(x, b, μ)` state emit different symbols.
pub fn structured_from_outputs(inst: &Instance, receiver: &ReceiverSpec, tree: &PrefixTree, outputs: &[Vec<usize>]) -> Result<StructuredEncoder> {
    let i = tree.encoder;
    let mut b_set = CanonicalBeliefSet::new();
    let bids = node_belief_ids(inst, tree, &mut b_set)?;
    let mut mu_set = CanonicalBeliefSet::new();
    let mut mus: Vec<MemoryBelief> = vec![MemoryBelief::initial(inst.alphabets.m_sizes[i]); tree.stages[0].len()];
    let mut stages = Vec::with_capacity(tree.stages.len());
    for t in 0..tree.stages.len() {
        let mut tab: Table<(usize, usize, usize), usize> = Table::default();
        for (k, n) in tree.stages[t].iter().enumerate() {
            let key = (*n.xs.last().unwrap(), bids[t][k], mu_set.intern(mus[k].pmf()));
            if let Some(&prev) = tab.get(&key) {
                if prev != outputs[t][k] {
                    return Err(Error::InvalidArgument(format!("strategy is not structured at stage {}", t + 1)));
                }
            }
            tab.insert(key, outputs[t][k]);
        }
        stages.push(tab);
        if t + 1 < tree.stages.len() {
            let rule = StageRule::of(receiver, i, t + 1)?;
            mus = tree.stages[t + 1]
                .iter()
                .map(|n| update_memory_belief(&mus[n.parent], outputs[t][n.parent], inst.channel(i, t + 1), rule))
                .collect::<Result<Vec<_>>>()?;
        }
    }
    Ok(StructuredEncoder { b_set, mu_set, stages })
}

/// Total cost of one candidate per encoder with the per-input best decoder.
pub fn combo_cost(inst: &Instance, combo: &[&LocalCandidate]) -> Result<f64> {
    let mut total = 0.0;
    for t in 1..=inst.horizon() {
        let sm: Vec<&StageMarginal> = combo.iter().map(|c| &c.marginals.stages[t - 1]).collect();
        total += stage_cost(inst, t, &sm, &CellRule::Min, None)?;
    }
    Ok(total)
}

/// Best decoder table (per-input minimum) for one combination.
pub fn combo_decoder(inst: &Instance, combo: &[&LocalCandidate]) -> Result<DecoderTable> {
    let mut stages = Vec::new();
    for t in 1..=inst.horizon() {
        let sm: Vec<&StageMarginal> = combo.iter().map(|c| &c.marginals.stages[t - 1]).collect();
        let mut rec = Table::default();
        stage_cost(inst, t, &sm, &CellRule::Min, Some(&mut rec))?;
        stages.push(rec);
    }
    Ok(DecoderTable { stages })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComboBest {
    pub cost: f64,
    pub picks: Vec<usize>,
}

fn better(a: &ComboBest, b: &ComboBest) -> bool {
    match a.cost.partial_cmp(&b.cost).unwrap_or(Ordering::Equal) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => a.picks < b.picks,
    }
}

/// Exhaustive minimum over the product of per-encoder candidate lists,
/// partitioned over the first encoder's candidates.
pub fn product_search(inst: &Instance, cands: &[Vec<LocalCandidate>], budget: &SearchBudget) -> Result<(ComboBest, u128)> {
    let total: u128 = cands.iter().map(|c| c.len() as u128).product();
    over_budget("strategy combinations", total, budget.max_strategies)?;
    if cands.iter().any(|c| c.is_empty()) {
        return Err(Error::InvalidArgument("empty candidate list".into()));
    }
    let n = cands.len();
    let part = |first: usize| -> Result<ComboBest> {
        let mut picks = vec![0usize; n];
        picks[0] = first;
        let mut best: Option<ComboBest> = None;
        'odo: loop {
            let combo: Vec<&LocalCandidate> = (0..n).map(|i| &cands[i][picks[i]]).collect();
            let cand = ComboBest { cost: combo_cost(inst, &combo)?, picks: picks.clone() };
            if best.as_ref().map_or(true, |b| better(&cand, b)) {
                best = Some(cand);
            }
            for i in (1..n).rev() {
                picks[i] += 1;
                if picks[i] < cands[i].len() {
                    continue 'odo;
                }
                picks[i] = 0;
            }
            break;
        }
        Ok(best.expect("non-empty"))
    };
    let parts: Vec<Result<ComboBest>> = if budget.workers <= 1 {
        (0..cands[0].len()).map(part).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(budget.workers).build().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        pool.install(|| (0..cands[0].len()).into_par_iter().map(part).collect())
    };
    let mut best: Option<ComboBest> = None;
    for p in parts {
        let p = p?;
        if best.as_ref().map_or(true, |b| better(&p, b)) {
            best = Some(p);
        }
    }
    Ok((best.expect("non-empty"), total))
}
