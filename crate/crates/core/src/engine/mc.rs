use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::exact::{assembly_marginals, resolve_decoder, EvaluationReport, McSummary, SystemAssembly, DEFAULT_ATOM_BUDGET};
use super::marginals::StageMarginal;
use crate::beliefs::{a_belief_of_path, memory_belief_of_path, Pmf};
use crate::error::{Error, Result};
use crate::model::MemoryMode;
use crate::policies::{Decoder, DecoderTable, Encode, EncodeCtx};

/// Samples per independent random stream.
pub const SHARD_SIZE: u64 = 1024;

pub(crate) fn draw(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let u: f64 = rng.random::<f64>() * weights.iter().sum::<f64>();
    let mut acc = 0.0;
    let mut last = 0;
    for (k, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = k;
            if u < acc {
                return k;
            }
        }
    }
    last
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStage {
    pub t: usize,
    pub x: Vec<usize>,
    pub b: Vec<Vec<f64>>,
    /// Memory beliefs (finite-memory mode only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<Vec<f64>>>,
    pub z: Vec<usize>,
    pub y: Vec<usize>,
    pub m_prev: Vec<usize>,
    pub psi: Vec<f64>,
    pub estimate: usize,
    pub distortion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub seed: u64,
    pub a: usize,
    pub components: Vec<usize>,
    pub stages: Vec<TraceStage>,
    pub total: f64,
}

struct Rollout {
    per_stage: Vec<f64>,
    defaulted: bool,
}

fn rollout(asm: &SystemAssembly, table: &DecoderTable, rng: &mut ChaCha8Rng, mut trace: Option<(&mut Trajectory, &[Vec<StageMarginal>])>) -> Result<Rollout> {
    let inst = &asm.instance;
    let n = inst.n();
    let a = draw(rng, inst.a_prior());
    let comps: Vec<Vec<(f64, &dyn Encode)>> = asm.encoders.iter().map(|e| e.components()).collect();
    let picks: Vec<usize> = comps.iter().map(|c| draw(rng, &c.iter().map(|(w, _)| *w).collect::<Vec<_>>())).collect();
    let mut xs: Vec<Vec<usize>> = (0..n).map(|i| vec![draw(rng, &inst.init(i)[a])]).collect();
    let mut zs: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut ms = vec![0usize; n];
    let mut out = Rollout { per_stage: Vec::with_capacity(inst.horizon()), defaulted: false };
    if let Some((tr, _)) = trace.as_mut() {
        tr.a = a;
        tr.components = picks.clone();
    }
    for t in 1..=inst.horizon() {
        let mut ys = vec![0usize; n];
        let mut zt = vec![0usize; n];
        for i in 0..n {
            let ctx = EncodeCtx { inst, receiver: &asm.receiver, encoder: i };
            let z = comps[i][picks[i]].1.encode(&ctx, t, &xs[i], &zs[i])?;
            zt[i] = z;
            ys[i] = draw(rng, &inst.channel(i, t)[z]);
        }
        let est = match table.stages[t - 1].get(&(ys.clone(), ms.clone())) {
            Some(&s) => s,
            None => {
                out.defaulted = true;
                0
            }
        };
        let cur: Vec<usize> = xs.iter().map(|h| *h.last().unwrap()).collect();
        let d = inst.rho(t)[inst.xa_index(&cur, a) * inst.est_size() + est];
        out.per_stage.push(d);
        if let Some((tr, margs)) = trace.as_mut() {
            let sm: Vec<&StageMarginal> = margs.iter().map(|m| &m[t - 1]).collect();
            let psi = cell_psi(inst, &sm, &ys, &ms);
            let b = (0..n).map(|i| a_belief_of_path(inst, i, &xs[i]).map(Pmf::into_vec)).collect::<Result<Vec<_>>>()?;
            let mu = match asm.receiver.mode {
                MemoryMode::Finite => Some((0..n).map(|i| memory_belief_of_path(inst, &asm.receiver, i, &zs[i]).map(|m| m.0.into_vec())).collect::<Result<Vec<_>>>()?),
                MemoryMode::Perfect => None,
            };
            tr.stages.push(TraceStage { t, x: cur.clone(), b, mu, z: zt.clone(), y: ys.clone(), m_prev: ms.clone(), psi, estimate: est, distortion: d });
        }
        for i in 0..n {
            zs[i].push(zt[i]);
            if t < inst.horizon() {
                ms[i] = asm.receiver.step(&inst.alphabets, i, t, ms[i], ys[i]);
                let xl = *xs[i].last().unwrap();
                xs[i].push(draw(rng, &inst.kernel(i, t)[a][xl]));
            }
        }
    }
    Ok(out)
}

fn cell_psi(inst: &crate::model::Instance, margs: &[&StageMarginal], ys: &[usize], ms: &[usize]) -> Vec<f64> {
    let mut w = vec![0.0; inst.xa_size()];
    for (idx, slot) in w.iter_mut().enumerate() {
        let (xs, a) = inst.xa_decode(idx);
        *slot = inst.a_prior()[a] * (0..margs.len()).map(|i| margs[i].get(a, xs[i], ms[i], ys[i])).product::<f64>();
    }
    let s: f64 = w.iter().sum();
    if s > 0.0 {
        w.iter_mut().for_each(|v| *v /= s);
    }
    w
}

fn decoder_table(asm: &SystemAssembly) -> Result<DecoderTable> {
    match &asm.decoder {
        Decoder::Table(t) => Ok(t.clone()),
        Decoder::Tau => resolve_decoder(asm, DEFAULT_ATOM_BUDGET),
    }
}

#[derive(Clone, Copy)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }
    fn merge(self, o: Moments) -> Moments {
        if self.n == 0 {
            return o;
        }
        if o.n == 0 {
            return self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments { n, mean: self.mean + d * o.n as f64 / n as f64, m2: self.m2 + o.m2 + d * d * (self.n as f64) * (o.n as f64) / n as f64 }
    }
}

pub fn simulate_mc(asm: &SystemAssembly, samples: u64, seed: u64) -> Result<EvaluationReport> {
    simulate_mc_with(asm, samples, seed, 1)
}

/// Seeded i.i.d. rollouts. Shard `k` draws from stream `k` of the seeded
/// generator and shards merge in index order, so `workers` never changes the result.
pub fn simulate_mc_with(asm: &SystemAssembly, samples: u64, seed: u64, workers: usize) -> Result<EvaluationReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument("at least one sample required".into()));
    }
    let table = decoder_table(asm)?;
    let shards = samples.div_ceil(SHARD_SIZE);
    let t_len = asm.instance.horizon();
    let run = |k: u64| -> Result<(Moments, Vec<f64>, u64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k);
        let count = SHARD_SIZE.min(samples - k * SHARD_SIZE);
        let mut mom = Moments { n: 0, mean: 0.0, m2: 0.0 };
        let mut sums = vec![0.0; t_len];
        let mut defaulted = 0;
        for _ in 0..count {
            let r = rollout(asm, &table, &mut rng, None)?;
            mom.push(r.per_stage.iter().sum());
            for (s, v) in sums.iter_mut().zip(&r.per_stage) {
                *s += v;
            }
            defaulted += r.defaulted as u64;
        }
        Ok((mom, sums, defaulted))
    };
    let parts: Vec<Result<(Moments, Vec<f64>, u64)>> = if workers <= 1 {
        (0..shards).map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        pool.install(|| (0..shards).into_par_iter().map(run).collect())
    };
    let mut mom = Moments { n: 0, mean: 0.0, m2: 0.0 };
    let mut sums = vec![0.0; t_len];
    let mut defaulted = 0;
    for p in parts {
        let (m, s, d) = p?;
        mom = mom.merge(m);
        for (a, b) in sums.iter_mut().zip(&s) {
            *a += b;
        }
        defaulted += d;
    }
    let stderr = if mom.n > 1 { (mom.m2 / (mom.n - 1) as f64 / mom.n as f64).sqrt() } else { 0.0 };
    Ok(EvaluationReport {
        total: mom.mean,
        per_stage: sums.iter().map(|s| s / samples as f64).collect(),
        monte_carlo: Some(McSummary { samples, seed, mean: mom.mean, stderr, defaulted }),
    })
}

/// One sample path with every internal quantity recorded.
pub fn trace_rollout(asm: &SystemAssembly, seed: u64) -> Result<Trajectory> {
    let table = decoder_table(asm)?;
    let margs: Vec<Vec<StageMarginal>> = assembly_marginals(asm, DEFAULT_ATOM_BUDGET)?.into_iter().map(|m| m.stages).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tr = Trajectory { seed, a: 0, components: Vec::new(), stages: Vec::new(), total: 0.0 };
    let r = rollout(asm, &table, &mut rng, Some((&mut tr, &margs)))?;
    tr.total = r.per_stage.iter().sum();
    Ok(tr)
}
