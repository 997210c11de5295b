#![allow(dead_code)]
//! Independent oracles used only by tests: everything here enumerates the
//! full joint law path by path instead of using the library's recursions.

use std::collections::BTreeMap;

use mtcode::beliefs::Pmf;
use mtcode::engine::SystemAssembly;
use mtcode::model::Instance;
use mtcode::policies::{decode_tau, Decoder, EncodeCtx};

/// One joint realization across all encoders.
struct Path {
    w: f64,
    a: usize,
    xs: Vec<Vec<usize>>,
    ys: Vec<Vec<usize>>,
    ms: Vec<Vec<usize>>,
}

fn local_paths(asm: &SystemAssembly, i: usize) -> Vec<(Vec<f64>, Vec<usize>, Vec<usize>, Vec<usize>)> {
    // (weight per a, x-path, y-path, memory path M_0..M_{T-1})
    let inst = &asm.instance;
    let t_len = inst.horizon();
    let ctx = EncodeCtx { inst, receiver: &asm.receiver, encoder: i };
    let mut out = Vec::new();
    for (cw, enc) in asm.encoders[i].components() {
        // enumerate all x paths regardless of probability
        let nx = inst.x_size(i);
        let total = nx.pow(t_len as u32);
        for code in 0..total {
            let mut xs = vec![0; t_len];
            let mut c = code;
            for s in (0..t_len).rev() {
                xs[s] = c % nx;
                c /= nx;
            }
            let w: Vec<f64> = (0..inst.a_size())
                .map(|a| {
                    let mut p = cw * inst.init(i)[a][xs[0]];
                    for t in 1..t_len {
                        p *= inst.kernel(i, t)[a][xs[t - 1]][xs[t]];
                    }
                    p
                })
                .collect();
            if w.iter().all(|&v| v == 0.0) {
                continue;
            }
            // enumerate y paths
            let ny = inst.y_size(i);
            for ycode in 0..ny.pow(t_len as u32) {
                let mut ys = vec![0; t_len];
                let mut c = ycode;
                for s in (0..t_len).rev() {
                    ys[s] = c % ny;
                    c /= ny;
                }
                let mut zs = Vec::new();
                let mut ms = vec![0];
                let mut py = 1.0;
                for t in 1..=t_len {
                    let z = enc.encode(&ctx, t, &xs[..t], &zs).unwrap();
                    py *= inst.channel(i, t)[z][ys[t - 1]];
                    if py == 0.0 {
                        break;
                    }
                    zs.push(z);
                    if t < t_len {
                        let m = asm.receiver.step(&inst.alphabets, i, t, *ms.last().unwrap(), ys[t - 1]);
                        ms.push(m);
                    }
                }
                if py > 0.0 {
                    out.push((w.iter().map(|v| v * py).collect(), xs.clone(), ys, ms));
                }
            }
        }
    }
    out
}

fn joint_paths(asm: &SystemAssembly) -> Vec<Path> {
    let inst = &asm.instance;
    let locals: Vec<_> = (0..inst.n()).map(|i| local_paths(asm, i)).collect();
    let mut out = Vec::new();
    for a in 0..inst.a_size() {
        let mut acc: Vec<Path> = vec![Path { w: inst.a_prior()[a], a, xs: vec![], ys: vec![], ms: vec![] }];
        for loc in &locals {
            let mut next = Vec::new();
            for p in &acc {
                for (w, xs, ys, ms) in loc {
                    let nw = p.w * w[a];
                    if nw == 0.0 {
                        continue;
                    }
                    let mut q = Path { w: nw, a, xs: p.xs.clone(), ys: p.ys.clone(), ms: p.ms.clone() };
                    q.xs.push(xs.clone());
                    q.ys.push(ys.clone());
                    q.ms.push(ms.clone());
                    next.push(q);
                }
            }
            acc = next;
        }
        out.extend(acc);
    }
    out
}

/// Expected distortion per stage by summing over every joint realization.
pub fn flat_cost(asm: &SystemAssembly) -> Vec<f64> {
    let inst = &asm.instance;
    let paths = joint_paths(asm);
    let est = inst.est_size();
    (1..=inst.horizon())
        .map(|t| {
            let rho = inst.rho(t);
            // cell -> weights over xa
            let mut cells: BTreeMap<(Vec<usize>, Vec<usize>), Vec<f64>> = BTreeMap::new();
            for p in &paths {
                let ys: Vec<usize> = p.ys.iter().map(|y| y[t - 1]).collect();
                let ms: Vec<usize> = p.ms.iter().map(|m| m[t - 1]).collect();
                let xs: Vec<usize> = p.xs.iter().map(|x| x[t - 1]).collect();
                cells.entry((ys, ms)).or_insert_with(|| vec![0.0; inst.xa_size()])[inst.xa_index(&xs, p.a)] += p.w;
            }
            cells
                .iter()
                .map(|(key, q)| {
                    let s = match &asm.decoder {
                        Decoder::Tau => {
                            let m: f64 = q.iter().sum();
                            decode_tau(&Pmf::new(q.iter().map(|v| v / m).collect()).unwrap_or_else(|_| Pmf::uniform(q.len())), rho, est)
                        }
                        Decoder::Table(tab) => tab.stages[t - 1][key],
                    };
                    q.iter().enumerate().map(|(x, p)| p * rho[x * est + s]).sum::<f64>()
                })
                .sum()
        })
        .collect()
}

/// `P(A | x_{1:t})` by joint enumeration.
pub fn direct_a_posterior(inst: &Instance, i: usize, xs: &[usize]) -> Option<Vec<f64>> {
    let w: Vec<f64> = (0..inst.a_size())
        .map(|a| {
            let mut p = inst.a_prior()[a] * inst.init(i)[a][xs[0]];
            for t in 1..xs.len() {
                p *= inst.kernel(i, t)[a][xs[t - 1]][xs[t]];
            }
            p
        })
        .collect();
    let s: f64 = w.iter().sum();
    (s > 0.0).then(|| w.iter().map(|v| v / s).collect())
}

pub fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// All sequences over `0..base` of length `len`.
pub fn sequences(base: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out.into_iter().flat_map(|s| (0..base).map(move |v| { let mut s2 = s.clone(); s2.push(v); s2 })).collect();
    }
    out
}

/// A deterministic general encoder with uniformly random outputs on every
/// reachable prefix.
pub fn random_general(inst: &Instance, i: usize, rng: &mut rand_chacha::ChaCha8Rng) -> mtcode::policies::EncoderPolicy {
    use rand::Rng;
    let tree = mtcode::engine::PrefixTree::build(inst, i);
    let outputs: Vec<Vec<usize>> = tree.stages.iter().map(|s| s.iter().map(|_| rng.random_range(0..inst.z_size(i))).collect()).collect();
    mtcode::policies::EncoderPolicy::General(tree.general_encoder(&outputs))
}

/// A system described directly by path laws, for checking rewritten
/// instances against the model they came from. Encoders act at stages
/// `1..=horizon`; the source path has length `source_len`.
pub struct FlatSystem<'a> {
    pub n: usize,
    pub a_prior: Vec<f64>,
    pub horizon: usize,
    pub source_len: usize,
    pub x_sizes: Vec<usize>,
    pub y_sizes: Vec<usize>,
    pub est_size: usize,
    /// `P(x_{1:source_len} | a)` for encoder `i`.
    pub path_weight: &'a dyn Fn(usize, usize, &[usize]) -> f64,
    /// `(i, t, x-path, z_{1:t-1}) -> z_t`.
    pub encode: &'a dyn Fn(usize, usize, &[usize], &[usize]) -> usize,
    /// `P(y | z)` for encoder `i` at stage `t`.
    pub channel: &'a dyn Fn(usize, usize, usize, usize) -> f64,
    /// Memory `M_t` from `M_{t-1}` and `y_t`, for `t < horizon`.
    pub memory: &'a dyn Fn(usize, usize, usize, usize) -> usize,
    /// Stage-`t` distortion of estimate `s` given every encoder's path and `a`.
    pub rho: &'a dyn Fn(usize, &[Vec<usize>], usize, usize) -> f64,
}

/// Per-stage cost of a [`FlatSystem`] under the best estimate for every
/// receiver input (cells keyed by current receptions and memories).
pub fn flat_system_cost(sys: &FlatSystem<'_>) -> Vec<f64> {
    type Local = (Vec<f64>, Vec<usize>, Vec<usize>, Vec<usize>);
    let locals: Vec<Vec<Local>> = (0..sys.n)
        .map(|i| {
            let mut out = Vec::new();
            for xs in sequences(sys.x_sizes[i], sys.source_len) {
                let w: Vec<f64> = (0..sys.a_prior.len()).map(|a| (sys.path_weight)(i, a, &xs)).collect();
                if w.iter().all(|&v| v == 0.0) {
                    continue;
                }
                for ys in sequences(sys.y_sizes[i], sys.horizon) {
                    let mut zs = Vec::new();
                    let mut ms = vec![0usize];
                    let mut p = 1.0;
                    for t in 1..=sys.horizon {
                        let z = (sys.encode)(i, t, &xs, &zs);
                        p *= (sys.channel)(i, t, z, ys[t - 1]);
                        zs.push(z);
                        if t < sys.horizon {
                            ms.push((sys.memory)(i, t, *ms.last().unwrap(), ys[t - 1]));
                        }
                    }
                    if p > 0.0 {
                        out.push((w.iter().map(|v| v * p).collect(), xs.clone(), ys, ms));
                    }
                }
            }
            out
        })
        .collect();
    // joint realizations: (weight, a, per-encoder local index)
    let mut joint: Vec<(f64, usize, Vec<usize>)> = Vec::new();
    for (a, pa) in sys.a_prior.iter().enumerate() {
        let mut acc = vec![(*pa, Vec::new())];
        for loc in &locals {
            let mut next = Vec::new();
            for (w, picks) in &acc {
                for (k, l) in loc.iter().enumerate() {
                    let nw = w * l.0[a];
                    if nw > 0.0 {
                        let mut p2 = picks.clone();
                        p2.push(k);
                        next.push((nw, p2));
                    }
                }
            }
            acc = next;
        }
        joint.extend(acc.into_iter().map(|(w, p)| (w, a, p)));
    }
    (1..=sys.horizon)
        .map(|t| {
            let mut cells: BTreeMap<(Vec<usize>, Vec<usize>), Vec<f64>> = BTreeMap::new();
            for (w, a, picks) in &joint {
                let ls: Vec<&Local> = picks.iter().enumerate().map(|(i, &k)| &locals[i][k]).collect();
                let key = (ls.iter().map(|l| l.2[t - 1]).collect(), ls.iter().map(|l| l.3[t - 1]).collect());
                let paths: Vec<Vec<usize>> = ls.iter().map(|l| l.1.clone()).collect();
                let costs = cells.entry(key).or_insert_with(|| vec![0.0; sys.est_size]);
                for (s, c) in costs.iter_mut().enumerate() {
                    *c += w * (sys.rho)(t, &paths, *a, s);
                }
            }
            cells.values().map(|c| c.iter().cloned().fold(f64::INFINITY, f64::min)).sum()
        })
        .collect()
}

/// `P(M_{t-1} = m | z_{1:t-1})` over `M ∪ {⊥}` (⊥ last) by enumerating
/// channel outputs.
pub fn direct_memory_belief(inst: &Instance, receiver: &mtcode::model::ReceiverSpec, i: usize, zs: &[usize]) -> Vec<f64> {
    let t = zs.len() + 1;
    if zs.is_empty() {
        let ms = inst.memory_size(i, 1);
        let mut v = vec![0.0; ms + 1];
        v[ms] = 1.0;
        return v;
    }
    let ms = receiver.memory_size(&inst.alphabets, i, t - 1);
    let mut out = vec![0.0; ms + 1];
    for ys in sequences(inst.y_size(i), zs.len()) {
        let mut p = 1.0;
        let mut m = 0;
        for (s, (&z, &y)) in zs.iter().zip(&ys).enumerate() {
            p *= inst.channel(i, s + 1)[z][y];
            m = receiver.step(&inst.alphabets, i, s + 1, m, y);
        }
        out[m] += p;
    }
    out
}

/// `P(X_t = x, b_t = b | z_{1:t})` when encoder `i` applies `ws[s]` to
/// `(x_s, b_s)`; keyed by `(x, belief id in set)`.
pub fn direct_xi(
    inst: &Instance,
    i: usize,
    ws: &[mtcode::policies::PartialEncoder],
    zs: &[usize],
    set: &mtcode::beliefs::CanonicalBeliefSet,
) -> Option<BTreeMap<(usize, usize), f64>> {
    let t = zs.len();
    let mut out: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut total = 0.0;
    for xs in sequences(inst.x_size(i), t) {
        let w: f64 = (0..inst.a_size())
            .map(|a| {
                let mut p = inst.a_prior()[a] * inst.init(i)[a][xs[0]];
                for s in 1..t {
                    p *= inst.kernel(i, s)[a][xs[s - 1]][xs[s]];
                }
                p
            })
            .sum();
        if w == 0.0 {
            continue;
        }
        let mut ok = true;
        let mut last_b = 0;
        for s in 1..=t {
            let b = Pmf::new(direct_a_posterior(inst, i, &xs[..s]).unwrap()).unwrap();
            let bid = set.find(&b).expect("belief catalogued");
            last_b = bid;
            if ws[s - 1].get(xs[s - 1], bid) != Some(zs[s - 1]) {
                ok = false;
                break;
            }
        }
        if ok {
            *out.entry((xs[t - 1], last_b)).or_default() += w;
            total += w;
        }
    }
    if total == 0.0 {
        return None;
    }
    out.values_mut().for_each(|v| *v /= total);
    Some(out)
}

/// Deterministic pseudo-random choice in `0..m` from a key, for policies
/// defined on original-model histories.
pub fn hash_pick(seed: u64, key: &[usize], m: usize) -> usize {
    let mut h: u64 = 0xcbf29ce484222325 ^ seed;
    for &k in key {
        h ^= k as u64 + 0x9e37;
        h = h.wrapping_mul(0x100000001b3);
        h ^= h >> 29;
    }
    (h % m as u64) as usize
}

/// A coordinator rule with a uniformly random partial encoder for every
/// reachable shared history of encoder `i`.
pub fn random_history_rule(
    inst: &Instance,
    i: usize,
    set: &mtcode::beliefs::CanonicalBeliefSet,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> mtcode::policies::HistoryRule {
    use mtcode::beliefs::{condition_xi, predict_xi, XiState};
    use mtcode::policies::{PartialEncoder, Table};
    use rand::Rng;
    let mut beliefs = set.clone();
    let mut frontier = vec![(Vec::<usize>::new(), XiState::Empty)];
    let mut stages = Vec::new();
    for t in 1..=inst.horizon() {
        let mut tab: Table<Vec<usize>, PartialEncoder> = Table::default();
        let mut next = Vec::new();
        for (hist, xi) in frontier {
            let pred = predict_xi(&xi, inst, i, t, &mut beliefs).unwrap();
            let w = PartialEncoder::from_pairs(pred.support.iter().map(|e| ((e.x, e.b), rng.random_range(0..inst.z_size(i)))));
            for z in 0..inst.z_size(i) {
                if pred.symbol_prob(&w, z).unwrap() > 0.0 {
                    let mut h = hist.clone();
                    h.push(z);
                    next.push((h, condition_xi(&pred, &w, z).unwrap()));
                }
            }
            tab.insert(hist, w);
        }
        stages.push(tab);
        frontier = next;
    }
    mtcode::policies::HistoryRule { b_set: beliefs, stages }
}

/// Encoder `i`'s own histories that occur with positive probability under a
/// deterministic policy: `(x_{1:t}, z_{1:t-1})` per stage.
pub fn own_histories(inst: &Instance, receiver: &mtcode::model::ReceiverSpec, policy: &mtcode::policies::EncoderPolicy, i: usize) -> Vec<Vec<(Vec<usize>, Vec<usize>)>> {
    let tree = mtcode::engine::PrefixTree::build(inst, i);
    let ctx = EncodeCtx { inst, receiver, encoder: i };
    let (_, enc) = policy.components()[0];
    let outputs = tree.assign(enc, &ctx).unwrap();
    let hists = tree.symbol_histories(&outputs);
    tree.stages.iter().enumerate().map(|(t, st)| st.iter().enumerate().map(|(k, n)| (n.xs.clone(), hists[t][k].clone())).collect()).collect()
}

/// Deterministic general encoder whose output is a function of the x-prefix.
pub fn prefix_encoder(inst: &Instance, i: usize, f: &dyn Fn(&[usize]) -> usize) -> mtcode::policies::EncoderPolicy {
    let tree = mtcode::engine::PrefixTree::build(inst, i);
    let outputs: Vec<Vec<usize>> = tree.stages.iter().map(|s| s.iter().map(|n| f(&n.xs)).collect()).collect();
    mtcode::policies::EncoderPolicy::General(tree.general_encoder(&outputs))
}

/// Joint `P(X_t = xs, A = a)` indexed like the receiver belief.
pub fn unconditional_xa(inst: &Instance, t: usize) -> Vec<f64> {
    let mut out = vec![0.0; inst.xa_size()];
    let n = inst.n();
    for a in 0..inst.a_size() {
        let per: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut p: Vec<f64> = inst.init(i)[a].clone();
                for s in 1..t {
                    let k = &inst.kernel(i, s)[a];
                    p = (0..inst.x_size(i)).map(|x2| (0..inst.x_size(i)).map(|x| p[x] * k[x][x2]).sum()).collect();
                }
                p
            })
            .collect();
        for idx in 0..inst.xa_size() {
            let (xs, a2) = inst.xa_decode(idx);
            if a2 == a {
                out[idx] = inst.a_prior()[a] * (0..n).map(|i| per[i][xs[i]]).product::<f64>();
            }
        }
    }
    out
}
