use super::pmf::Pmf;
use crate::error::{Error, Result};
use crate::model::{Instance, Matrix, MemoryMode, ReceiverSpec};

/// Encoder's belief on the receiver's memory for its channel, over
/// `M ∪ {⊥}` with the sentinel at index `|M|`.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryBelief(pub Pmf);

impl MemoryBelief {
    /// Stage-1 belief: point mass on the sentinel.
    pub fn initial(m_size: usize) -> Self {
        Self(Pmf::point(m_size + 1, m_size))
    }

    pub fn sentinel(&self) -> usize {
        self.0.len() - 1
    }

    pub fn pmf(&self) -> &Pmf {
        &self.0
    }
}

/// Memory update table for one stage; the sentinel row uses the stage-1 map.
#[derive(Debug, Clone, Copy)]
pub struct StageRule<'a> {
    pub first: &'a [usize],
    pub table: Option<&'a [Vec<usize>]>,
}

impl<'a> StageRule<'a> {
    /// Rule producing `M_t` in finite-memory mode.
    pub fn of(spec: &'a ReceiverSpec, i: usize, t: usize) -> Result<Self> {
        if spec.mode != MemoryMode::Finite {
            return Err(Error::InvalidArgument("memory beliefs need finite-memory rules".into()));
        }
        let r = &spec.memory_rules[i];
        let table = if t >= 2 {
            let k = match r.later.listed_len() {
                Some(n) if n > 0 => (t - 2).min(n - 1),
                _ => t - 2,
            };
            r.later.get(k).map(|v| v.as_slice())
        } else {
            None
        };
        Ok(Self { first: &r.first, table })
    }

    pub fn apply(&self, m_prev: Option<usize>, y: usize) -> usize {
        match (m_prev, self.table) {
            (Some(m), Some(tab)) => tab[m][y],
            _ => self.first[y],
        }
    }
}

/// Push the previous memory belief through the channel and the update rule.
pub fn update_memory_belief(prev: &MemoryBelief, z_prev: usize, channel: &Matrix, rule: StageRule<'_>) -> Result<MemoryBelief> {
    let len = prev.0.len();
    let sentinel = len - 1;
    let row = channel.get(z_prev).ok_or_else(|| Error::InvalidArgument(format!("symbol {z_prev} out of range")))?;
    let mut w = vec![0.0; len];
    for m in 0..len {
        let pm = prev.0[m];
        if pm == 0.0 {
            continue;
        }
        let from = if m == sentinel { None } else { Some(m) };
        for (y, &py) in row.iter().enumerate() {
            if py > 0.0 {
                let next = rule.apply(from, y);
                if next >= sentinel {
                    return Err(Error::InvalidArgument("memory rule out of range".into()));
                }
                w[next] += py * pm;
            }
        }
    }
    Ok(MemoryBelief(Pmf::from_weights(w, "memory belief lost all mass")?))
}

/// Memory belief after sending `zs` (stages `1..=zs.len()`), for stage `zs.len() + 1`.
pub fn memory_belief_of_path(inst: &Instance, receiver: &ReceiverSpec, i: usize, zs: &[usize]) -> Result<MemoryBelief> {
    let mut mu = MemoryBelief::initial(inst.alphabets.m_sizes[i]);
    for (k, &z) in zs.iter().enumerate() {
        let t = k + 1;
        mu = update_memory_belief(&mu, z, inst.channel(i, t), StageRule::of(receiver, i, t)?)?;
    }
    Ok(mu)
}
