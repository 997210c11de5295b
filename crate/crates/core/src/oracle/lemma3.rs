use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::beliefs::{update_a_belief, update_memory_belief, CanonicalBeliefSet, MemoryBelief, Pmf, StageRule};
use crate::error::{Error, Result};
use crate::model::{Instance, MemoryMode, ReceiverSpec};

pub const MARKOV_TOL: f64 = 1e-10;

/// Which belief statistic defines the encoder state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeliefVariant {
    /// The Bayes recursion.
    Exact,
    /// Drops the previous-belief factor from each update (negative control).
    DropPrevious,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovReport {
    pub encoder: usize,
    pub variant: BeliefVariant,
    pub histories: usize,
    /// Largest spread of next-state laws among histories sharing `(r_t, z_t)`.
    pub max_group_spread: f64,
    /// Largest gap between the history-conditioned law and the one-step kernel of `(r_t, z_t)`.
    pub max_kernel_gap: f64,
    pub pass: bool,
}

fn path_weight(inst: &Instance, i: usize, xs: &[usize]) -> Vec<f64> {
    (0..inst.a_size())
        .map(|a| {
            let mut p = inst.a_prior()[a] * inst.init(i)[a][xs[0]];
            for t in 1..xs.len() {
                p *= inst.kernel(i, t)[a][xs[t - 1]][xs[t]];
            }
            p
        })
        .collect()
}

fn variant_step(v: BeliefVariant, prev: &Pmf, xp: usize, x: usize, ker: &crate::model::Kernel) -> Result<Pmf> {
    match v {
        BeliefVariant::Exact => update_a_belief(prev, xp, x, ker),
        BeliefVariant::DropPrevious => Pmf::from_weights((0..prev.len()).map(|a| ker[a][xp][x]).collect(), "transition impossible"),
    }
}

/// Belief statistic for a full path, computed by the defining formula:
/// direct Bayes over the joint for the exact variant.
fn direct_belief(inst: &Instance, i: usize, xs: &[usize], v: BeliefVariant) -> Result<Pmf> {
    match v {
        BeliefVariant::Exact => Pmf::from_weights(path_weight(inst, i, xs), "path impossible"),
        BeliefVariant::DropPrevious => {
            if xs.len() == 1 {
                Pmf::from_weights(path_weight(inst, i, xs), "path impossible")
            } else {
                let t = xs.len() - 1;
                Pmf::from_weights((0..inst.a_size()).map(|a| inst.kernel(i, t)[a][xs[t - 1]][xs[t]]).collect(), "transition impossible")
            }
        }
    }
}

/// `P(M_t = m | z_{1:t})` by enumerating channel noise.
fn direct_memory(inst: &Instance, receiver: &ReceiverSpec, i: usize, zs: &[usize]) -> Pmf {
    let ms = inst.alphabets.m_sizes[i];
    let mut w = vec![0.0; ms + 1];
    if zs.is_empty() {
        w[ms] = 1.0;
        return Pmf::from_weights(w, "").expect("point mass");
    }
    let mut paths: Vec<(f64, usize)> = vec![(1.0, 0)];
    for (k, &z) in zs.iter().enumerate() {
        let t = k + 1;
        let mut next = Vec::new();
        for &(p, m) in &paths {
            for (y, &py) in inst.channel(i, t)[z].iter().enumerate() {
                if py > 0.0 {
                    next.push((p * py, receiver.step(&inst.alphabets, i, t, m, y)));
                }
            }
        }
        paths = next;
    }
    for (p, m) in paths {
        w[m] += p;
    }
    Pmf::from_weights(w, "").expect("positive mass")
}

type Law = BTreeMap<(usize, usize, usize), f64>;

fn law_gap(a: &Law, b: &Law) -> f64 {
    a.keys().chain(b.keys()).map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs()).fold(0.0, f64::max)
}

/// Check that `R_t = (x_t, b_t, μ_t)` is a controlled Markov chain with the
/// transmitted symbol as control, for every positive-probability observation
/// history and every symbol history.
pub fn verify_lemma3_markov(inst: &Instance, receiver: &ReceiverSpec, i: usize, variant: BeliefVariant, max_histories: usize) -> Result<MarkovReport> {
    if receiver.mode != MemoryMode::Finite {
        return Err(Error::InvalidArgument("memory beliefs need finite receiver memory".into()));
    }
    let mut bset = CanonicalBeliefSet::new();
    let mut mset = CanonicalBeliefSet::new();
    let xsz = inst.x_size(i);
    let zsz = inst.z_size(i);
    let mut groups: BTreeMap<(usize, (usize, usize, usize), usize), Law> = BTreeMap::new();
    let (mut spread, mut gap, mut histories) = (0.0f64, 0.0f64, 0usize);
    // Positive-probability observation prefixes, grown stage by stage.
    let mut prefixes: Vec<Vec<usize>> = (0..xsz).map(|x| vec![x]).filter(|p| path_weight(inst, i, p).iter().sum::<f64>() > 0.0).collect();
    for t in 1..inst.horizon() {
        let mut zhists: Vec<Vec<usize>> = vec![Vec::new()];
        for _ in 0..t {
            zhists = zhists.into_iter().flat_map(|h| (0..zsz).map(move |z| { let mut h2 = h.clone(); h2.push(z); h2 })).collect();
        }
        let rule = StageRule::of(receiver, i, t)?;
        for xs in &prefixes {
            let w_now: f64 = path_weight(inst, i, xs).iter().sum();
            // Recursive statistic along the path.
            let mut b = direct_belief(inst, i, &xs[..1], variant)?;
            for s in 1..xs.len() {
                b = variant_step(variant, &b, xs[s - 1], xs[s], inst.kernel(i, s))?;
            }
            let bid = bset.intern(&b);
            for zs in &zhists {
                histories += 1;
                if histories > max_histories {
                    return Err(Error::BudgetExceeded { what: "histories", count: histories as u128, limit: max_histories as u128 });
                }
                let mu_prev = direct_memory(inst, receiver, i, &zs[..t - 1]);
                let r_t = (xs[t - 1], bid, mset.intern(&mu_prev));
                // Law of R_{t+1} given the whole history, from the joint.
                let mu_next = direct_memory(inst, receiver, i, zs);
                let mid = mset.intern(&mu_next);
                let mut direct = Law::new();
                for x in 0..xsz {
                    let mut ext = xs.clone();
                    ext.push(x);
                    let p: f64 = path_weight(inst, i, &ext).iter().sum::<f64>() / w_now;
                    if p > 0.0 {
                        let nb = bset.intern(&direct_belief(inst, i, &ext, variant)?);
                        *direct.entry((x, nb, mid)).or_default() += p;
                    }
                }
                // One-step kernel from (r_t, z_t) alone.
                let mut kernel = Law::new();
                let mu_k = update_memory_belief(&MemoryBelief(mu_prev.clone()), zs[t - 1], inst.channel(i, t), rule)?;
                let mk = mset.intern(mu_k.pmf());
                let ker = inst.kernel(i, t);
                for x in 0..xsz {
                    let p: f64 = (0..b.len()).map(|a| b[a] * ker[a][xs[t - 1]][x]).sum();
                    if p > 0.0 {
                        let nb = bset.intern(&variant_step(variant, &b, xs[t - 1], x, ker)?);
                        *kernel.entry((x, nb, mk)).or_default() += p;
                    }
                }
                gap = gap.max(law_gap(&direct, &kernel));
                let key = (t, r_t, zs[t - 1]);
                match groups.get(&key) {
                    Some(first) => spread = spread.max(law_gap(first, &direct)),
                    None => {
                        groups.insert(key, direct);
                    }
                }
            }
        }
        let mut next = Vec::new();
        for xs in &prefixes {
            for x in 0..xsz {
                let mut e = xs.clone();
                e.push(x);
                if path_weight(inst, i, &e).iter().sum::<f64>() > 0.0 {
                    next.push(e);
                }
            }
        }
        prefixes = next;
    }
    Ok(MarkovReport { encoder: i, variant, histories, max_group_spread: spread, max_kernel_gap: gap, pass: spread <= MARKOV_TOL && gap <= MARKOV_TOL })
}
