//! Seeded random instances for verification suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::instance::*;
use super::staged::Staged;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistortionKind {
    /// Estimate the joint `(x^1, .., x^n)`; cost 1 on mismatch.
    JointHamming,
    /// Uniform random table with the given estimate alphabet size.
    Random(usize),
}

#[derive(Debug, Clone)]
pub struct RandomSpec {
    pub n_encoders: usize,
    pub x_sizes: Vec<usize>,
    pub a_size: usize,
    pub z_sizes: Vec<usize>,
    pub m_sizes: Vec<usize>,
    pub horizon: usize,
    pub mode: MemoryMode,
    pub noiseless: bool,
    pub time_varying: bool,
    pub distortion: DistortionKind,
    /// Chance of zeroing a stochastic entry (each row keeps at least one).
    pub sparsity: f64,
}

impl RandomSpec {
    /// Two encoders with uniform sizes, finite noisy memory, Hamming distortion.
    pub fn uniform(x: usize, a: usize, z: usize, m: usize, horizon: usize) -> Self {
        Self {
            n_encoders: 2,
            x_sizes: vec![x; 2],
            a_size: a,
            z_sizes: vec![z; 2],
            m_sizes: vec![m; 2],
            horizon,
            mode: MemoryMode::Finite,
            noiseless: false,
            time_varying: false,
            distortion: DistortionKind::JointHamming,
            sparsity: 0.0,
        }
    }

    /// Noiseless channels with perfect receiver memory.
    pub fn perfect(x: usize, a: usize, z: usize, horizon: usize) -> Self {
        Self { mode: MemoryMode::Perfect, noiseless: true, m_sizes: vec![1; 2], ..Self::uniform(x, a, z, 1, horizon) }
    }
}

pub fn random_pmf(rng: &mut impl Rng, len: usize, sparsity: f64) -> Vec<f64> {
    let mut w: Vec<f64> = (0..len).map(|_| rng.random_range(0.05..1.0)).collect();
    if sparsity > 0.0 && len > 1 {
        let keep = rng.random_range(0..len);
        for (j, v) in w.iter_mut().enumerate() {
            if j != keep && rng.random_bool(sparsity) {
                *v = 0.0;
            }
        }
    }
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

fn staged<T>(rng: &mut ChaCha8Rng, count: usize, varying: bool, mut f: impl FnMut(&mut ChaCha8Rng) -> T) -> Staged<T> {
    if varying {
        Staged::Stages((0..count).map(|_| f(rng)).collect())
    } else {
        Staged::Invariant(f(rng))
    }
}

pub fn random_instance(spec: &RandomSpec, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.n_encoders;
    let t = spec.horizon;
    let y_sizes = spec.z_sizes.clone();
    let m_sizes = if spec.mode == MemoryMode::Perfect { vec![1; n] } else { spec.m_sizes.clone() };
    let sp = spec.sparsity;
    let a_prior = random_pmf(&mut rng, spec.a_size, 0.0);
    let mut init = Vec::new();
    let mut kernel = Vec::new();
    let mut matrix = Vec::new();
    let mut rules = Vec::new();
    for i in 0..n {
        let xs = spec.x_sizes[i];
        init.push((0..spec.a_size).map(|_| random_pmf(&mut rng, xs, sp)).collect());
        kernel.push(staged(&mut rng, t.saturating_sub(1), spec.time_varying, |r| {
            (0..spec.a_size).map(|_| (0..xs).map(|_| random_pmf(r, xs, sp)).collect()).collect()
        }));
        let (zs, ys) = (spec.z_sizes[i], y_sizes[i]);
        if spec.noiseless {
            let id: Matrix = (0..zs).map(|r| (0..zs).map(|c| if r == c { 1.0 } else { 0.0 }).collect()).collect();
            matrix.push(Staged::Invariant(id));
        } else {
            matrix.push(staged(&mut rng, t, spec.time_varying, |r| (0..zs).map(|_| random_pmf(r, ys, sp)).collect()));
        }
        if spec.mode == MemoryMode::Finite {
            let ms = m_sizes[i];
            let first = (0..ys).map(|_| rng.random_range(0..ms)).collect();
            let later = staged(&mut rng, t.saturating_sub(2), spec.time_varying, |r| {
                (0..ms).map(|_| (0..ys).map(|_| r.random_range(0..ms)).collect()).collect()
            });
            rules.push(MemoryRules { first, later });
        }
    }
    let alphabets = Alphabets {
        n_encoders: n,
        x_sizes: spec.x_sizes.clone(),
        a_size: spec.a_size,
        z_sizes: spec.z_sizes.clone(),
        y_sizes,
        m_sizes,
        horizon: t,
    };
    let xa: usize = spec.x_sizes.iter().product::<usize>() * spec.a_size;
    let distortion = match spec.distortion {
        DistortionKind::JointHamming => {
            let est: usize = spec.x_sizes.iter().product();
            let mut tab = vec![0.0; xa * est];
            for idx in 0..xa {
                let joint = idx / spec.a_size;
                for s in 0..est {
                    tab[idx * est + s] = if s == joint { 0.0 } else { 1.0 };
                }
            }
            DistortionSpec { estimate_size: est, rho: Staged::Invariant(tab) }
        }
        DistortionKind::Random(est) => DistortionSpec {
            estimate_size: est,
            rho: staged(&mut rng, t, spec.time_varying, |r| (0..xa * est).map(|_| r.random_range(0.0..1.0)).collect()),
        },
    };
    Instance {
        alphabets,
        source: SourceModel { a_prior, init, kernel },
        channels: ChannelModel { matrix },
        receiver: ReceiverSpec { mode: spec.mode, memory_rules: rules },
        distortion,
    }
}
