use serde::{Deserialize, Serialize};

use super::table::Table;
use super::{Encode, EncodeCtx};
use crate::beliefs::{memory_belief_of_path, tracked_a_belief_of_path, CanonicalBeliefSet};
use crate::error::{Error, Result};

/// `(x_t, b-id, μ-id)` at one stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EncoderMarkovState {
    pub x: usize,
    pub b: usize,
    pub mu: usize,
}

/// Encoder that depends on the history only through the current symbol,
/// its belief on the latent variable and its belief on the receiver memory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructuredEncoder {
    pub b_set: CanonicalBeliefSet,
    pub mu_set: CanonicalBeliefSet,
    pub stages: Vec<Table<(usize, usize, usize), usize>>,
}

pub fn structured_encode(enc: &StructuredEncoder, state: EncoderMarkovState, t: usize) -> Result<usize> {
    enc.stages
        .get(t - 1)
        .and_then(|s| s.get(&(state.x, state.b, state.mu)))
        .copied()
        .ok_or_else(|| Error::MissingEntry(format!("structured encoder, stage {t}, state {state:?}")))
}

impl StructuredEncoder {
    /// The Markov state reached by a local history.
    pub fn state_of(&self, ctx: &EncodeCtx<'_>, xs: &[usize], zs: &[usize]) -> Result<EncoderMarkovState> {
        let i = ctx.encoder;
        let b = tracked_a_belief_of_path(ctx.inst, i, xs, &self.b_set)?;
        let mu = memory_belief_of_path(ctx.inst, ctx.receiver, i, zs)?;
        let b = self.b_set.find(&b).ok_or_else(|| Error::MissingEntry(format!("belief {b:?} not in set")))?;
        let mu = self.mu_set.find(mu.pmf()).ok_or_else(|| Error::MissingEntry(format!("memory belief {mu:?} not in set")))?;
        Ok(EncoderMarkovState { x: *xs.last().unwrap(), b, mu })
    }
}

impl Encode for StructuredEncoder {
    fn encode(&self, ctx: &EncodeCtx<'_>, t: usize, xs: &[usize], zs: &[usize]) -> Result<usize> {
        structured_encode(self, self.state_of(ctx, xs, zs)?, t)
    }
}
