//! Receiver belief and stage cost from the coordinator's state when the other
//! encoders are fixed and all channels are noiseless.

use std::collections::BTreeMap;

use super::canonical::CanonicalBeliefSet;
use super::pmf::Pmf;
use super::xi::XiState;
use crate::error::{Error, Result};
use crate::model::{Instance, ReceiverSpec};
use crate::policies::{decode_tau, EncodeCtx, EncoderPolicy};

/// For every encoder other than `target` and every stage `t`:
/// `z_{1:t} -> [a * |X| + x] = P(Z_{1:t} = z_{1:t}, X_t = x | A = a)`.
#[derive(Debug, Clone)]
pub struct SideForward {
    pub target: usize,
    pub tables: Vec<Vec<BTreeMap<Vec<usize>, Vec<f64>>>>,
}

impl SideForward {
    pub fn build(inst: &Instance, encoders: &[EncoderPolicy], receiver: &ReceiverSpec, target: usize) -> Result<Self> {
        let a_size = inst.a_size();
        let mut tables = Vec::with_capacity(inst.n());
        for j in 0..inst.n() {
            if j == target {
                tables.push(Vec::new());
                continue;
            }
            let ctx = EncodeCtx { inst, receiver, encoder: j };
            let xsz = inst.x_size(j);
            let mut per_stage = vec![BTreeMap::<Vec<usize>, Vec<f64>>::new(); inst.horizon()];
            for (cw, enc) in encoders[j].components() {
                // (xs, zs, weight per a)
                let mut frontier: Vec<(Vec<usize>, Vec<usize>, Vec<f64>)> = (0..xsz)
                    .map(|x| (vec![x], vec![], (0..a_size).map(|a| cw * inst.init(j)[a][x]).collect::<Vec<f64>>()))
                    .filter(|(_, _, w)| w.iter().any(|&v| v > 0.0))
                    .collect();
                for t in 1..=inst.horizon() {
                    let mut next = Vec::new();
                    for (xs, mut zs, w) in frontier {
                        let z = enc.encode(&ctx, t, &xs, &zs)?;
                        zs.push(z);
                        let x = *xs.last().unwrap();
                        let row = per_stage[t - 1].entry(zs.clone()).or_insert_with(|| vec![0.0; a_size * xsz]);
                        for a in 0..a_size {
                            row[a * xsz + x] += w[a];
                        }
                        if t < inst.horizon() {
                            for x2 in 0..xsz {
                                let w2: Vec<f64> = (0..a_size).map(|a| w[a] * inst.kernel(j, t)[a][x][x2]).collect();
                                if w2.iter().any(|&v| v > 0.0) {
                                    let mut xs2 = xs.clone();
                                    xs2.push(x2);
                                    next.push((xs2, zs.clone(), w2));
                                }
                            }
                        }
                    }
                    frontier = next;
                }
            }
            tables.push(per_stage);
        }
        Ok(Self { target, tables })
    }

    /// All combinations of side histories at stage `t` (target slot left empty).
    pub fn history_combos(&self, t: usize) -> Vec<Vec<Vec<usize>>> {
        let mut combos: Vec<Vec<Vec<usize>>> = vec![Vec::new()];
        for (j, per_stage) in self.tables.iter().enumerate() {
            let keys: Vec<Vec<usize>> = if j == self.target { vec![Vec::new()] } else { per_stage[t - 1].keys().cloned().collect() };
            combos = combos.into_iter().flat_map(|c| keys.iter().map(move |k| { let mut c2 = c.clone(); c2.push(k.clone()); c2 })).collect();
        }
        combos
    }
}

fn psi_weights(xi: &XiState, t: usize, side_hist: &[Vec<usize>], side: &SideForward, inst: &Instance, beliefs: &CanonicalBeliefSet) -> Vec<f64> {
    let n = inst.n();
    let tgt = side.target;
    let xa = xi.x_a_marginal(inst.x_size(tgt), beliefs);
    let mut w = vec![0.0; inst.xa_size()];
    let side_rows: Vec<Option<&Vec<f64>>> = (0..n).map(|j| if j == tgt { None } else { side.tables[j][t - 1].get(&side_hist[j]) }).collect();
    if side_rows.iter().enumerate().any(|(j, r)| j != tgt && r.is_none()) {
        return w;
    }
    for (idx, slot) in w.iter_mut().enumerate() {
        let (xs, a) = inst.xa_decode(idx);
        let mut p = xa[xs[tgt]][a];
        for j in 0..n {
            if j != tgt {
                p *= side_rows[j].unwrap()[a * inst.x_size(j) + xs[j]];
            }
        }
        *slot = p;
    }
    w
}

/// Receiver belief from the coordinator state and the other encoders' histories.
pub fn psi_from_xi(xi: &XiState, side_hist: &[Vec<usize>], side: &SideForward, inst: &Instance, beliefs: &CanonicalBeliefSet) -> Result<Pmf> {
    let t = side_hist.iter().enumerate().find(|(j, _)| *j != side.target).map_or(0, |(_, h)| h.len());
    if t == 0 {
        return Err(Error::InvalidArgument("side histories must be non-empty".into()));
    }
    Pmf::from_weights(psi_weights(xi, t, side_hist, side, inst, beliefs), "side evidence has zero probability")
}

/// Expected stage-`t` distortion under the posterior-optimal estimate, given
/// the coordinator state, averaged over the other encoders' histories.
pub fn coordinator_stage_cost(xi: &XiState, t: usize, side: &SideForward, inst: &Instance, beliefs: &CanonicalBeliefSet) -> f64 {
    let rho = inst.rho(t);
    let est = inst.est_size();
    let mut total = 0.0;
    for combo in side.history_combos(t) {
        let w = psi_weights(xi, t, &combo, side, inst, beliefs);
        let mass: f64 = w.iter().sum();
        if mass <= 0.0 {
            continue;
        }
        let psi = Pmf::from_weights(w.clone(), "").expect("positive mass");
        let s = decode_tau(&psi, rho, est);
        total += w.iter().enumerate().filter(|(_, p)| **p > 0.0).map(|(x, p)| p * rho[x * est + s]).sum::<f64>();
    }
    total
}
