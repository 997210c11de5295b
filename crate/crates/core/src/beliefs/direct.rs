//! Receiver posterior by brute-force enumeration of the joint law.

use super::pmf::Pmf;
use crate::error::{Error, Result};
use crate::model::{Instance, ReceiverSpec};
use crate::policies::{EncodeCtx, EncoderPolicy};

/// One complete local realization for a single encoder up to stage `t`.
#[derive(Debug, Clone)]
pub struct LocalAtom {
    /// `P(path | A = a)` including mixture weight and channel noise.
    pub weight: Vec<f64>,
    pub xs: Vec<usize>,
    pub zs: Vec<usize>,
    pub ys: Vec<usize>,
    /// `M_0 .. M_{t-1}`.
    pub ms: Vec<usize>,
}

/// Every positive-probability realization of `(x_{1:t}, z_{1:t}, y_{1:t})`
/// for encoder `i`, with its memory trajectory.
pub fn local_atoms(inst: &Instance, policy: &EncoderPolicy, receiver: &ReceiverSpec, i: usize, t: usize) -> Result<Vec<LocalAtom>> {
    let ctx = EncodeCtx { inst, receiver, encoder: i };
    let a_size = inst.a_size();
    let mut out = Vec::new();
    for (cw, enc) in policy.components() {
        let mut frontier: Vec<LocalAtom> = Vec::new();
        for x in 0..inst.x_size(i) {
            let w: Vec<f64> = (0..a_size).map(|a| cw * inst.init(i)[a][x]).collect();
            if w.iter().any(|&v| v > 0.0) {
                frontier.push(LocalAtom { weight: w, xs: vec![x], zs: vec![], ys: vec![], ms: vec![0] });
            }
        }
        for s in 1..=t {
            let mut next = Vec::new();
            for at in frontier {
                let z = enc.encode(&ctx, s, &at.xs, &at.zs)?;
                for (y, &py) in inst.channel(i, s)[z].iter().enumerate() {
                    if py <= 0.0 {
                        continue;
                    }
                    let mut zs = at.zs.clone();
                    zs.push(z);
                    let mut ys = at.ys.clone();
                    ys.push(y);
                    let w: Vec<f64> = at.weight.iter().map(|v| v * py).collect();
                    if s == t {
                        next.push(LocalAtom { weight: w, xs: at.xs.clone(), zs, ys, ms: at.ms.clone() });
                        continue;
                    }
                    let mut ms = at.ms.clone();
                    ms.push(receiver.step(&inst.alphabets, i, s, *at.ms.last().unwrap(), y));
                    let xl = *at.xs.last().unwrap();
                    for x in 0..inst.x_size(i) {
                        let w2: Vec<f64> = (0..a_size).map(|a| w[a] * inst.kernel(i, s)[a][xl][x]).collect();
                        if w2.iter().any(|&v| v > 0.0) {
                            let mut xs = at.xs.clone();
                            xs.push(x);
                            next.push(LocalAtom { weight: w2, xs, zs: zs.clone(), ys: ys.clone(), ms: ms.clone() });
                        }
                    }
                }
            }
            frontier = next;
        }
        out.extend(frontier);
    }
    Ok(out)
}

/// Upper limit on joint atoms visited by [`receiver_belief_direct`].
pub const DIRECT_ATOM_LIMIT: u128 = 100_000_000;

/// `P(X_t = (x, a) | Y_t = ys, M_{t-1} = ms)` by enumerating the joint over
/// the latent variable and every encoder's local realization.
pub fn receiver_belief_direct(inst: &Instance, encoders: &[EncoderPolicy], receiver: &ReceiverSpec, t: usize, ys: &[usize], ms: &[usize]) -> Result<Pmf> {
    let n = inst.n();
    let locals: Vec<Vec<LocalAtom>> = (0..n).map(|i| local_atoms(inst, &encoders[i], receiver, i, t)).collect::<Result<_>>()?;
    let count: u128 = locals.iter().map(|l| l.len() as u128).product::<u128>() * inst.a_size() as u128;
    if count > DIRECT_ATOM_LIMIT {
        return Err(Error::BudgetExceeded { what: "joint atoms", count, limit: DIRECT_ATOM_LIMIT });
    }
    let mut w = vec![0.0; inst.xa_size()];
    let mut pick = vec![0usize; n];
    for a in 0..inst.a_size() {
        let pa = inst.a_prior()[a];
        if pa == 0.0 {
            continue;
        }
        'odo: loop {
            let mut p = pa;
            let mut hit = true;
            let mut xs = Vec::with_capacity(n);
            for i in 0..n {
                let at = &locals[i][pick[i]];
                p *= at.weight[a];
                hit &= at.ys[t - 1] == ys[i] && at.ms[t - 1] == ms[i];
                xs.push(at.xs[t - 1]);
            }
            if hit && p > 0.0 {
                w[inst.xa_index(&xs, a)] += p;
            }
            for i in 0..n {
                pick[i] += 1;
                if pick[i] < locals[i].len() {
                    continue 'odo;
                }
                pick[i] = 0;
            }
            break;
        }
    }
    Pmf::from_weights(w, "receiver evidence has zero probability")
}
