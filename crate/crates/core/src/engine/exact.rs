use serde::{Deserialize, Serialize};

use super::marginals::{encoder_marginals, EncoderMarginals, StageMarginal};
use super::tree::PrefixTree;
use crate::error::{Error, Result};
use crate::model::{Instance, ReceiverSpec};
use crate::policies::{decode_tau, Decoder, DecoderTable, EncodeCtx, EncoderPolicy, PolicyFile, Table};

pub const DEFAULT_ATOM_BUDGET: u128 = 100_000_000;

/// Instance plus every decision rule.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemAssembly {
    pub instance: Instance,
    pub encoders: Vec<EncoderPolicy>,
    pub receiver: ReceiverSpec,
    pub decoder: Decoder,
}

impl SystemAssembly {
    pub fn new(instance: Instance, encoders: Vec<EncoderPolicy>, decoder: Decoder) -> Self {
        let receiver = instance.receiver.clone();
        Self { instance, encoders, receiver, decoder }
    }

    pub fn from_policy(instance: Instance, pf: PolicyFile) -> Result<Self> {
        if pf.encoders.len() != instance.n() {
            return Err(Error::InvalidArgument(format!("policy has {} encoders, instance has {}", pf.encoders.len(), instance.n())));
        }
        let receiver = pf.receiver.unwrap_or_else(|| instance.receiver.clone());
        Ok(Self { instance, encoders: pf.encoders, receiver, decoder: pf.decoder })
    }

    pub fn policy_file(&self) -> PolicyFile {
        PolicyFile {
            encoders: self.encoders.clone(),
            receiver: (self.receiver != self.instance.receiver).then(|| self.receiver.clone()),
            decoder: self.decoder.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub samples: u64,
    pub seed: u64,
    pub mean: f64,
    pub stderr: f64,
    /// Samples that reached a receiver input with no decoder entry (estimate 0 used).
    pub defaulted: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub total: f64,
    pub per_stage: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<McSummary>,
}

/// Rule used to turn a receiver cell into an estimate during evaluation.
pub enum CellRule<'a> {
    /// Posterior-optimal estimate (normalized belief, tolerant ties).
    Tau,
    /// Cheapest estimate for the cell's unnormalized weights (exact ties).
    Min,
    Table(&'a Table<(Vec<usize>, Vec<usize>), usize>),
}

fn check_budget(count: u128, budget: u128) -> Result<()> {
    if count > budget {
        return Err(Error::BudgetExceeded { what: "evaluation atoms", count, limit: budget });
    }
    Ok(())
}

/// Upper bound on the prefix-tree size before building it.
pub fn tree_bound(inst: &Instance, i: usize) -> u128 {
    let x = inst.x_size(i) as u128;
    (1..=inst.horizon() as u32).map(|t| x.saturating_pow(t)).fold(0u128, |a, b| a.saturating_add(b))
}

pub fn cell_count(margs: &[&StageMarginal]) -> u128 {
    margs.iter().map(|m| (m.m_size * m.y_size) as u128).product()
}

/// Visit every receiver cell `(ys, ms)` at stage `t` with positive mass,
/// passing the joint weights over `(x^1, .., x^n, a)`.
pub fn for_each_cell(inst: &Instance, margs: &[&StageMarginal], mut f: impl FnMut(&[usize], &[usize], &[f64]) -> Result<()>) -> Result<()> {
    let n = margs.len();
    let a_size = inst.a_size();
    let x_prod: usize = margs.iter().map(|m| m.x_size).product();
    let mut ys = vec![0usize; n];
    let mut ms = vec![0usize; n];
    let mut q = vec![0.0; x_prod * a_size];
    let mut r = vec![0.0; x_prod];
    let mut r2 = vec![0.0; x_prod];
    'outer: loop {
        let live = (0..n).all(|i| {
            let m = margs[i];
            (0..a_size).any(|a| (0..m.x_size).any(|x| m.get(a, x, ms[i], ys[i]) > 0.0))
        });
        if live {
            let mut mass = 0.0;
            for a in 0..a_size {
                let pa = inst.a_prior()[a];
                r[0] = pa;
                let mut len = 1;
                for i in 0..n {
                    let m = margs[i];
                    for j in 0..len {
                        for x in 0..m.x_size {
                            r2[j * m.x_size + x] = r[j] * m.get(a, x, ms[i], ys[i]);
                        }
                    }
                    len *= m.x_size;
                    std::mem::swap(&mut r, &mut r2);
                }
                for xt in 0..x_prod {
                    q[xt * a_size + a] = r[xt];
                    mass += r[xt];
                }
            }
            if mass > 0.0 {
                f(&ys, &ms, &q)?;
            }
        }
        for i in (0..n).rev() {
            ys[i] += 1;
            if ys[i] < margs[i].y_size {
                continue 'outer;
            }
            ys[i] = 0;
            ms[i] += 1;
            if ms[i] < margs[i].m_size {
                continue 'outer;
            }
            ms[i] = 0;
        }
        break;
    }
    Ok(())
}

/// Expected distortion of stage `t`; chosen estimates are written to `record`.
pub fn stage_cost(
    inst: &Instance,
    t: usize,
    margs: &[&StageMarginal],
    rule: &CellRule<'_>,
    mut record: Option<&mut Table<(Vec<usize>, Vec<usize>), usize>>,
) -> Result<f64> {
    let rho = inst.rho(t);
    let est = inst.est_size();
    let mut total = 0.0;
    let mut costs = vec![0.0; est];
    for_each_cell(inst, margs, |ys, ms, q| {
        let s = match rule {
            CellRule::Tau => {
                let mass: f64 = q.iter().sum();
                let psi = crate::beliefs::Pmf::from_weights(q.iter().map(|v| v / mass).collect(), "")?;
                decode_tau(&psi, rho, est)
            }
            CellRule::Min => {
                for (s, c) in costs.iter_mut().enumerate() {
                    *c = q.iter().enumerate().filter(|(_, p)| **p > 0.0).map(|(x, p)| p * rho[x * est + s]).sum();
                }
                let mut best = 0;
                for s in 1..est {
                    if costs[s] < costs[best] {
                        best = s;
                    }
                }
                best
            }
            CellRule::Table(tab) => *tab
                .get(&(ys.to_vec(), ms.to_vec()))
                .ok_or_else(|| Error::MissingEntry(format!("decoder stage {t}, input {ys:?}/{ms:?}")))?,
        };
        if s >= est {
            return Err(Error::InvalidArgument(format!("estimate {s} out of range")));
        }
        total += q.iter().enumerate().filter(|(_, p)| **p > 0.0).map(|(x, p)| p * rho[x * est + s]).sum::<f64>();
        if let Some(rec) = record.as_deref_mut() {
            rec.insert((ys.to_vec(), ms.to_vec()), s);
        }
        Ok(())
    })?;
    Ok(total)
}

/// Stage marginals of one encoder policy (mixtures are averaged).
pub fn policy_marginals(inst: &Instance, receiver: &ReceiverSpec, policy: &EncoderPolicy, tree: &PrefixTree) -> Result<EncoderMarginals> {
    let ctx = EncodeCtx { inst, receiver, encoder: tree.encoder };
    let mut acc: Option<EncoderMarginals> = None;
    for (w, enc) in policy.components() {
        let outputs = tree.assign(enc, &ctx)?;
        let m = encoder_marginals(inst, receiver, tree, &outputs);
        match acc.as_mut() {
            None => {
                let mut z = m.clone();
                for s in &mut z.stages {
                    s.data.iter_mut().for_each(|v| *v = 0.0);
                }
                z.add_scaled(&m, w);
                acc = Some(z);
            }
            Some(a) => a.add_scaled(&m, w),
        }
    }
    acc.ok_or_else(|| Error::InvalidArgument("encoder has no components".into()))
}

pub fn assembly_marginals(asm: &SystemAssembly, budget: u128) -> Result<Vec<EncoderMarginals>> {
    let inst = &asm.instance;
    if asm.encoders.len() != inst.n() {
        return Err(Error::InvalidArgument("one policy per encoder required".into()));
    }
    let mut atoms: u128 = 0;
    for i in 0..inst.n() {
        let per_node: u128 = (0..inst.horizon()).map(|t| asm.receiver.memory_size(&inst.alphabets, i, t) as u128).max().unwrap_or(1) * inst.y_size(i) as u128;
        atoms = atoms.saturating_add(tree_bound(inst, i).saturating_mul(per_node).saturating_mul(asm.encoders[i].components().len() as u128));
    }
    check_budget(atoms, budget)?;
    (0..inst.n())
        .map(|i| {
            let tree = PrefixTree::build(inst, i);
            policy_marginals(inst, &asm.receiver, &asm.encoders[i], &tree)
        })
        .collect()
}

fn rule_for<'a>(dec: &'a Decoder, t: usize) -> Result<CellRule<'a>> {
    Ok(match dec {
        Decoder::Tau => CellRule::Tau,
        Decoder::Table(tab) => CellRule::Table(tab.stages.get(t - 1).ok_or_else(|| Error::MissingEntry(format!("decoder has no stage {t}")))?),
    })
}

/// Exact expected total distortion by propagating each encoder's factored law.
pub fn expected_distortion_exact(asm: &SystemAssembly) -> Result<EvaluationReport> {
    expected_distortion_exact_with(asm, DEFAULT_ATOM_BUDGET)
}

pub fn expected_distortion_exact_with(asm: &SystemAssembly, budget: u128) -> Result<EvaluationReport> {
    let margs = assembly_marginals(asm, budget)?;
    let inst = &asm.instance;
    let mut per_stage = Vec::with_capacity(inst.horizon());
    let mut cells: u128 = 0;
    for t in 1..=inst.horizon() {
        let sm: Vec<&StageMarginal> = margs.iter().map(|m| &m.stages[t - 1]).collect();
        cells = cells.saturating_add(cell_count(&sm).saturating_mul(inst.xa_size() as u128));
        check_budget(cells, budget)?;
        per_stage.push(stage_cost(inst, t, &sm, &rule_for(&asm.decoder, t)?, None)?);
    }
    Ok(EvaluationReport { total: per_stage.iter().sum(), per_stage, monte_carlo: None })
}

/// Decoder table holding the assembly's decisions on every positive-mass input.
pub fn resolve_decoder(asm: &SystemAssembly, budget: u128) -> Result<DecoderTable> {
    let margs = assembly_marginals(asm, budget)?;
    let inst = &asm.instance;
    let mut stages = Vec::with_capacity(inst.horizon());
    for t in 1..=inst.horizon() {
        let sm: Vec<&StageMarginal> = margs.iter().map(|m| &m.stages[t - 1]).collect();
        let mut rec = Table::default();
        stage_cost(inst, t, &sm, &rule_for(&asm.decoder, t)?, Some(&mut rec))?;
        stages.push(rec);
    }
    Ok(DecoderTable { stages })
}

/// Fill every receiver input absent from `table` with estimate `default`;
/// returns the completed table and how many entries were added.
pub fn complete_decoder(inst: &Instance, receiver: &ReceiverSpec, table: &DecoderTable, default: usize) -> (DecoderTable, usize) {
    let n = inst.n();
    let mut added = 0;
    let mut stages = Vec::with_capacity(inst.horizon());
    for t in 1..=inst.horizon() {
        let mut tab = table.stages.get(t - 1).cloned().unwrap_or_default();
        let dims: Vec<(usize, usize)> = (0..n).map(|i| (inst.y_size(i), receiver.memory_size(&inst.alphabets, i, t - 1))).collect();
        let mut ys = vec![0; n];
        let mut ms = vec![0; n];
        'odo: loop {
            let key = (ys.clone(), ms.clone());
            if !tab.contains_key(&key) {
                tab.insert(key, default);
                added += 1;
            }
            for i in (0..n).rev() {
                ys[i] += 1;
                if ys[i] < dims[i].0 {
                    continue 'odo;
                }
                ys[i] = 0;
                ms[i] += 1;
                if ms[i] < dims[i].1 {
                    continue 'odo;
                }
                ms[i] = 0;
            }
            break;
        }
        stages.push(tab);
    }
    (DecoderTable { stages }, added)
}

