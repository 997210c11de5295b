//! Instance rewrites: higher-order sources, delayed estimation, the
//! single-encoder embedding and exposing the latent variable to an encoder.

use serde::{Deserialize, Serialize};

use super::instance::{Alphabets, ChannelModel, DistortionSpec, Instance, Kernel, MemoryMode, MemoryRules, ReceiverSpec, SourceModel};
use super::staged::Staged;
use super::tuples::TupleSpace;
use crate::error::{invalid_arg, Result};

/// Source kernels that condition on the last `order` symbols.
/// `kernel[i]` is indexed `[a][context][x_next]` where `context` ranges over
/// the tuples of length `1..=order` (see [`TupleSpace`]); at stage `t` only
/// contexts of length `min(t, order)` are consulted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KthOrderKernels {
    pub order: usize,
    pub kernel: Vec<Staged<Kernel>>,
}

impl KthOrderKernels {
    pub fn from_first_order(inst: &Instance) -> Self {
        Self { order: 1, kernel: inst.source.kernel.clone() }
    }
}

fn remap_rho(base: &Instance, new_sizes: &[usize], f: impl Fn(usize, &[usize]) -> Vec<usize>) -> Staged<Vec<f64>> {
    // f maps (encoder, new state) -> old symbol; applied per encoder below.
    let a_size = base.a_size();
    let est = base.est_size();
    let new_xa: usize = new_sizes.iter().product::<usize>() * a_size;
    base.distortion.rho.map(|tab| {
        let mut out = vec![0.0; new_xa * est];
        for idx in 0..new_xa {
            let a = idx % a_size;
            let mut rest = idx / a_size;
            let mut news = vec![0; new_sizes.len()];
            for i in (0..new_sizes.len()).rev() {
                news[i] = rest % new_sizes[i];
                rest /= new_sizes[i];
            }
            let olds: Vec<usize> = (0..new_sizes.len()).map(|i| f(i, &news)[0]).collect();
            let old = base.xa_index(&olds, a);
            out[idx * est..(idx + 1) * est].copy_from_slice(&tab[old * est..(old + 1) * est]);
        }
        out
    })
}

/// Regroup a `k`th-order source into a first-order one over symbol tuples.
pub fn lift_kth_order(base: &Instance, kernels: &KthOrderKernels) -> Result<Instance> {
    let k = kernels.order;
    if k == 0 {
        return invalid_arg("lift order must be at least 1");
    }
    let n = base.n();
    if kernels.kernel.len() != n {
        return invalid_arg("one kernel list per encoder required");
    }
    let spaces: Vec<TupleSpace> = (0..n).map(|i| TupleSpace::new(base.x_size(i), k)).collect();
    let a_size = base.a_size();
    let mut init = Vec::with_capacity(n);
    let mut kernel = Vec::with_capacity(n);
    for i in 0..n {
        let sp = spaces[i];
        let size = sp.size();
        init.push(
            base.init(i)
                .iter()
                .map(|row| {
                    let mut r = vec![0.0; size];
                    r[..row.len()].copy_from_slice(row);
                    r
                })
                .collect::<Vec<_>>(),
        );
        let lifted = kernels.kernel[i].try_map(|ker| -> Result<Kernel> {
            if ker.len() != a_size || ker.iter().any(|t| t.len() != size) {
                return invalid_arg(format!("encoder {i}: kernel must be [a][context({size})][x]"));
            }
            Ok(ker
                .iter()
                .map(|tab| {
                    (0..size)
                        .map(|s| {
                            let ctx = sp.decode(s);
                            let mut row = vec![0.0; size];
                            for (x, &p) in tab[s].iter().enumerate() {
                                let mut next = ctx.clone();
                                if next.len() == k {
                                    next.remove(0);
                                }
                                next.push(x);
                                row[sp.encode(&next)] += p;
                            }
                            row
                        })
                        .collect()
                })
                .collect())
        })?;
        kernel.push(lifted);
    }
    let new_sizes: Vec<usize> = spaces.iter().map(|s| s.size()).collect();
    let rho = remap_rho(base, &new_sizes, |i, news| vec![*spaces[i].decode(news[i]).last().unwrap()]);
    Ok(Instance {
        alphabets: Alphabets { x_sizes: new_sizes, ..base.alphabets.clone() },
        source: SourceModel { a_prior: base.a_prior().to_vec(), init, kernel },
        channels: base.channels.clone(),
        receiver: base.receiver.clone(),
        distortion: DistortionSpec { estimate_size: base.est_size(), rho },
    })
}

/// Window `(start, end)` of original stages held by the lifted state at stage `t`.
fn delay_window(t: usize, d: usize, horizon: usize) -> (usize, usize) {
    let start = if t > d { t - d } else { 1 };
    (start, t.min(horizon))
}

/// Allow the receiver `d` extra stages: the lifted instance has horizon `T + d`
/// and charges `rho_{t-d}` against the oldest symbol of the window at stage `t`.
pub fn lift_delay(base: &Instance, d: usize) -> Result<Instance> {
    if d == 0 {
        return Ok(base.clone());
    }
    let n = base.n();
    let big_t = base.horizon();
    let new_t = big_t + d;
    let width = (d + 1).min(big_t);
    let spaces: Vec<TupleSpace> = (0..n).map(|i| TupleSpace::new(base.x_size(i), width)).collect();
    let a_size = base.a_size();
    let mut init = Vec::with_capacity(n);
    let mut kernel = Vec::with_capacity(n);
    for i in 0..n {
        let sp = spaces[i];
        let size = sp.size();
        init.push(
            base.init(i)
                .iter()
                .map(|row| {
                    let mut r = vec![0.0; size];
                    r[..row.len()].copy_from_slice(row);
                    r
                })
                .collect::<Vec<_>>(),
        );
        let mut stages = Vec::with_capacity(new_t - 1);
        for t in 1..new_t {
            let (s0, e0) = delay_window(t, d, big_t);
            let (s1, e1) = delay_window(t + 1, d, big_t);
            let len_now = e0 + 1 - s0;
            let len_next = e1 + 1 - s1;
            let mut ker = Vec::with_capacity(a_size);
            for a in 0..a_size {
                let mut tab = Vec::with_capacity(size);
                for s in 0..size {
                    let tup = sp.decode(s);
                    let mut row = vec![0.0; size];
                    if tup.len() != len_now {
                        row[sp.encode(&vec![0; len_next])] = 1.0;
                    } else {
                        let mut kept = tup.clone();
                        if s1 > s0 {
                            kept.remove(0);
                        }
                        if e1 > e0 {
                            let orig = &base.kernel(i, t)[a][*tup.last().unwrap()];
                            for (x, &p) in orig.iter().enumerate() {
                                let mut next = kept.clone();
                                next.push(x);
                                row[sp.encode(&next)] += p;
                            }
                        } else {
                            row[sp.encode(&kept)] = 1.0;
                        }
                    }
                    tab.push(row);
                }
                ker.push(tab);
            }
            stages.push(ker);
        }
        kernel.push(Staged::Stages(stages));
    }
    let channels = ChannelModel {
        matrix: base
            .channels
            .matrix
            .iter()
            .map(|m| match m {
                Staged::Invariant(_) => m.clone(),
                Staged::Stages(v) => Staged::Stages((1..=new_t).map(|t| v[t.min(big_t) - 1].clone()).collect()),
            })
            .collect(),
    };
    let receiver = match base.receiver.mode {
        MemoryMode::Perfect => base.receiver.clone(),
        MemoryMode::Finite => ReceiverSpec {
            mode: MemoryMode::Finite,
            memory_rules: base
                .receiver
                .memory_rules
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let ms = base.alphabets.m_sizes[i];
                    let latest = |t: usize| -> Vec<Vec<usize>> {
                        if big_t >= 3 {
                            r.later.at((t.min(big_t - 1)) - 2).clone()
                        } else {
                            vec![r.first.clone(); ms]
                        }
                    };
                    let later = match (&r.later, big_t >= 3) {
                        (Staged::Invariant(_), true) => r.later.clone(),
                        _ => Staged::Stages((2..new_t).map(latest).collect()),
                    };
                    MemoryRules { first: r.first.clone(), later }
                })
                .collect(),
        },
    };
    let new_sizes: Vec<usize> = spaces.iter().map(|s| s.size()).collect();
    let est = base.est_size();
    let new_xa: usize = new_sizes.iter().product::<usize>() * a_size;
    let mut rho = Vec::with_capacity(new_t);
    for t in 1..=new_t {
        let mut out = vec![0.0; new_xa * est];
        if t > d {
            let tab = base.rho(t - d);
            for idx in 0..new_xa {
                let a = idx % a_size;
                let mut rest = idx / a_size;
                let mut olds = vec![0; n];
                for i in (0..n).rev() {
                    olds[i] = spaces[i].decode(rest % new_sizes[i])[0];
                    rest /= new_sizes[i];
                }
                let old = base.xa_index(&olds, a);
                out[idx * est..(idx + 1) * est].copy_from_slice(&tab[old * est..(old + 1) * est]);
            }
        }
        rho.push(out);
    }
    Ok(Instance {
        alphabets: Alphabets { x_sizes: new_sizes, horizon: new_t, ..base.alphabets.clone() },
        source: SourceModel { a_prior: base.a_prior().to_vec(), init, kernel },
        channels,
        receiver,
        distortion: DistortionSpec { estimate_size: est, rho: Staged::Stages(rho) },
    })
}

/// Embed a single-encoder problem as a two-encoder one whose second encoder
/// observes and sends nothing.
pub fn degenerate_p4(base: &Instance) -> Result<Instance> {
    if base.n() != 1 {
        return invalid_arg("point-to-point embedding expects a single encoder");
    }
    let al = &base.alphabets;
    let a_size = al.a_size;
    let mut inst = base.clone();
    inst.alphabets = Alphabets {
        n_encoders: 2,
        x_sizes: vec![al.x_sizes[0], 1],
        a_size,
        z_sizes: vec![al.z_sizes[0], 1],
        y_sizes: vec![al.y_sizes[0], 1],
        m_sizes: vec![al.m_sizes[0], 1],
        horizon: al.horizon,
    };
    inst.source.init.push(vec![vec![1.0]; a_size]);
    inst.source.kernel.push(Staged::Invariant(vec![vec![vec![1.0]]; a_size]));
    inst.channels.matrix.push(Staged::Invariant(vec![vec![1.0]]));
    if base.receiver.mode == MemoryMode::Finite {
        inst.receiver.memory_rules.push(MemoryRules { first: vec![0], later: Staged::Invariant(vec![vec![0]]) });
    }
    Ok(inst)
}

/// Let encoder `i` observe the latent variable: its state becomes `(x, a)`
/// with index `x * |A| + a`.
pub fn observe_a_at_encoder(base: &Instance, i: usize) -> Result<Instance> {
    if i >= base.n() {
        return invalid_arg("encoder index out of range");
    }
    let a_size = base.a_size();
    let xs = base.x_size(i);
    let size = xs * a_size;
    let mut inst = base.clone();
    inst.source.init[i] = (0..a_size)
        .map(|a| {
            let mut row = vec![0.0; size];
            for x in 0..xs {
                row[x * a_size + a] = base.init(i)[a][x];
            }
            row
        })
        .collect();
    inst.source.kernel[i] = base.source.kernel[i].map(|ker| {
        (0..a_size)
            .map(|a| {
                (0..size)
                    .map(|s| {
                        let mut row = vec![0.0; size];
                        for (x2, &p) in ker[a][s / a_size].iter().enumerate() {
                            row[x2 * a_size + a] = p;
                        }
                        row
                    })
                    .collect()
            })
            .collect()
    });
    let mut new_sizes = base.alphabets.x_sizes.clone();
    new_sizes[i] = size;
    inst.distortion.rho = remap_rho(base, &new_sizes, |j, news| vec![if j == i { news[j] / a_size } else { news[j] }]);
    inst.alphabets.x_sizes = new_sizes;
    Ok(inst)
}
