use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::staged::Staged;
use super::validate::validate;
use crate::error::{Error, Result};

/// Transition kernel indexed `[a][x][x_next]`.
pub type Kernel = Vec<Vec<Vec<f64>>>;
/// Row-stochastic matrix indexed `[row][col]`.
pub type Matrix = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Alphabets {
    pub n_encoders: usize,
    pub x_sizes: Vec<usize>,
    pub a_size: usize,
    pub z_sizes: Vec<usize>,
    pub y_sizes: Vec<usize>,
    pub m_sizes: Vec<usize>,
    pub horizon: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceModel {
    pub a_prior: Vec<f64>,
    /// `[i][a][x]`
    pub init: Vec<Matrix>,
    /// `[i]`, one kernel per transition `t -> t+1`, `t = 1..T-1`.
    pub kernel: Vec<Staged<Kernel>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelModel {
    /// `[i]`, one `[z][y]` matrix per stage.
    pub matrix: Vec<Staged<Matrix>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryMode {
    Finite,
    Perfect,
}

/// Memory update tables for one channel. `first` maps `y -> m` at stage 1;
/// `later` holds `[m][y] -> m` tables for stages `2..T-1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemoryRules {
    pub first: Vec<usize>,
    pub later: Staged<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverSpec {
    pub mode: MemoryMode,
    #[serde(default)]
    pub memory_rules: Vec<MemoryRules>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistortionSpec {
    pub estimate_size: usize,
    /// Flat per-stage table over `(x^1, .., x^n, a, estimate)`, row-major.
    pub rho: Staged<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub alphabets: Alphabets,
    pub source: SourceModel,
    pub channels: ChannelModel,
    pub receiver: ReceiverSpec,
    pub distortion: DistortionSpec,
}

impl ReceiverSpec {
    /// Size of the alphabet of `M^i_t`; `M_0` is the single sentinel value 0.
    pub fn memory_size(&self, alph: &Alphabets, i: usize, t: usize) -> usize {
        if t == 0 {
            return 1;
        }
        match self.mode {
            MemoryMode::Finite => alph.m_sizes[i],
            MemoryMode::Perfect => alph.y_sizes[i].saturating_pow(t as u32),
        }
    }

    /// `M^i_t` from `M^i_{t-1} = m_prev` and `Y^i_t = y`.
    pub fn step(&self, alph: &Alphabets, i: usize, t: usize, m_prev: usize, y: usize) -> usize {
        match self.mode {
            MemoryMode::Perfect => m_prev * alph.y_sizes[i] + y,
            MemoryMode::Finite => {
                let rules = &self.memory_rules[i];
                if t <= 1 {
                    rules.first[y]
                } else {
                    let k = match rules.later.listed_len() {
                        Some(n) if n > 0 => (t - 2).min(n - 1),
                        _ => t - 2,
                    };
                    match rules.later.get(k) {
                        Some(tab) => tab[m_prev][y],
                        None => rules.first[y],
                    }
                }
            }
        }
    }
}

impl Instance {
    pub fn n(&self) -> usize {
        self.alphabets.n_encoders
    }
    pub fn horizon(&self) -> usize {
        self.alphabets.horizon
    }
    pub fn a_size(&self) -> usize {
        self.alphabets.a_size
    }
    pub fn x_size(&self, i: usize) -> usize {
        self.alphabets.x_sizes[i]
    }
    pub fn z_size(&self, i: usize) -> usize {
        self.alphabets.z_sizes[i]
    }
    pub fn y_size(&self, i: usize) -> usize {
        self.alphabets.y_sizes[i]
    }
    pub fn est_size(&self) -> usize {
        self.distortion.estimate_size
    }
    pub fn a_prior(&self) -> &[f64] {
        &self.source.a_prior
    }
    pub fn init(&self, i: usize) -> &Matrix {
        &self.source.init[i]
    }
    /// Kernel for the transition from stage `t` to `t + 1`.
    pub fn kernel(&self, i: usize, t: usize) -> &Kernel {
        self.source.kernel[i].at(t - 1)
    }
    pub fn channel(&self, i: usize, t: usize) -> &Matrix {
        self.channels.matrix[i].at(t - 1)
    }
    pub fn rho(&self, t: usize) -> &[f64] {
        self.distortion.rho.at(t - 1)
    }
    pub fn memory_size(&self, i: usize, t: usize) -> usize {
        self.receiver.memory_size(&self.alphabets, i, t)
    }

    /// Number of joint source states `(x^1, .., x^n, a)`.
    pub fn xa_size(&self) -> usize {
        self.alphabets.x_sizes.iter().product::<usize>() * self.a_size()
    }

    pub fn xa_index(&self, xs: &[usize], a: usize) -> usize {
        let mut idx = 0;
        for (i, &x) in xs.iter().enumerate() {
            idx = idx * self.x_size(i) + x;
        }
        idx * self.a_size() + a
    }

    pub fn xa_decode(&self, mut idx: usize) -> (Vec<usize>, usize) {
        let a = idx % self.a_size();
        idx /= self.a_size();
        let mut xs = vec![0; self.n()];
        for i in (0..self.n()).rev() {
            xs[i] = idx % self.x_size(i);
            idx /= self.x_size(i);
        }
        (xs, a)
    }

    pub fn is_noiseless(&self, i: usize) -> bool {
        self.z_size(i) == self.y_size(i)
            && self.channels.matrix[i].stored().iter().all(|(_, m)| is_identity(m))
    }

    /// Parse and validate.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let inst: Instance = serde_json::from_str(s)?;
        inst.checked()
    }

    pub fn checked(self) -> Result<Self> {
        let report = validate(&self);
        if report.ok() {
            Ok(self)
        } else {
            Err(Error::Invalid(report))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    /// SHA-256 of the canonical compact serialization.
    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("instance serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

pub(crate) fn is_identity(m: &Matrix) -> bool {
    m.iter()
        .enumerate()
        .all(|(r, row)| row.len() == m.len() && row.iter().enumerate().all(|(c, &v)| v == if r == c { 1.0 } else { 0.0 }))
}
