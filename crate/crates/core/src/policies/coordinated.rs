//! Encoders driven by the common (noiselessly shared) history.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::partial::PartialEncoder;
use super::table::Table;
use super::{Encode, EncodeCtx};
use crate::beliefs::{tracked_a_belief_of_path, update_xi, CanonicalBeliefSet, XiState, DEDUP_TOL};
use crate::error::{Error, Result};

fn belief_id(ctx: &EncodeCtx<'_>, xs: &[usize], set: &CanonicalBeliefSet) -> Result<usize> {
    let b = tracked_a_belief_of_path(ctx.inst, ctx.encoder, xs, set)?;
    set.find(&b).ok_or_else(|| Error::MissingEntry(format!("belief {b:?} not in set")))
}

/// `z_t = f_t(x_t, b_t, z_{1:t-1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommonInfoEncoder {
    pub b_set: CanonicalBeliefSet,
    pub stages: Vec<Table<(usize, usize, Vec<usize>), usize>>,
}

impl Encode for CommonInfoEncoder {
    fn encode(&self, ctx: &EncodeCtx<'_>, t: usize, xs: &[usize], zs: &[usize]) -> Result<usize> {
        let b = belief_id(ctx, xs, &self.b_set)?;
        let x = *xs.last().unwrap();
        self.stages
            .get(t - 1)
            .and_then(|s| s.get(&(x, b, zs.to_vec())))
            .copied()
            .ok_or_else(|| Error::MissingEntry(format!("common-information encoder, stage {t}, ({x}, {b}, {zs:?})")))
    }
}

/// Coordinator rule in history form: the common symbol history selects the
/// partial encoder (earlier selections are themselves functions of it).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistoryRule {
    pub b_set: CanonicalBeliefSet,
    pub stages: Vec<Table<Vec<usize>, PartialEncoder>>,
}

/// Coordinator rule in Markov form: stage-`t` choice indexed by the id of the
/// stage `t-1` information state.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkovRule {
    pub stages: Vec<Table<usize, PartialEncoder>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordinatorRule {
    History(HistoryRule),
    Markov(MarkovRule),
}

impl HistoryRule {
    /// The encoder it induces: `f_t(x, b, z_{1:t-1}) = rule_t(z_{1:t-1})(x, b)`.
    pub fn to_encoder(&self) -> CommonInfoEncoder {
        let stages = self
            .stages
            .iter()
            .map(|st| st.iter().flat_map(|(zh, w)| w.0.iter().map(move |(&(x, b), &z)| ((x, b, zh.clone()), z))).collect())
            .collect();
        CommonInfoEncoder { b_set: self.b_set.clone(), stages }
    }

    /// Inverse of [`HistoryRule::to_encoder`]: slice the encoder along each common history.
    pub fn from_encoder(enc: &CommonInfoEncoder) -> Self {
        let stages = enc
            .stages
            .iter()
            .map(|st| {
                let mut t: Table<Vec<usize>, PartialEncoder> = Table::default();
                for ((x, b, zh), &z) in st.iter() {
                    t.entry(zh.clone()).or_default().0.insert((*x, *b), z);
                }
                t
            })
            .collect();
        Self { b_set: enc.b_set.clone(), stages }
    }
}

/// Distinct information states per stage (stage 0 holds only the sentinel)
/// together with the belief set their ids refer to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XiCatalog {
    pub b_set: CanonicalBeliefSet,
    pub stages: Vec<Vec<XiState>>,
}

impl XiCatalog {
    pub fn find(&self, stage: usize, xi: &XiState) -> Option<usize> {
        self.stages.get(stage)?.iter().position(|s| s.linf(xi) <= DEDUP_TOL)
    }
}

/// Runs the coordinator online: tracks the information state with the
/// update recursion and applies the Markov rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoordinatorEncoder {
    pub catalog: Arc<XiCatalog>,
    pub rule: MarkovRule,
}

impl CoordinatorEncoder {
    fn choice(&self, stage: usize, xi: &XiState) -> Result<&PartialEncoder> {
        let id = self.catalog.find(stage - 1, xi).ok_or_else(|| Error::MissingEntry(format!("state at stage {} not catalogued", stage - 1)))?;
        self.rule.stages[stage - 1].get(&id).ok_or_else(|| Error::MissingEntry(format!("no selection at stage {stage} for state {id}")))
    }
}

impl Encode for CoordinatorEncoder {
    fn encode(&self, ctx: &EncodeCtx<'_>, t: usize, xs: &[usize], zs: &[usize]) -> Result<usize> {
        let mut beliefs = self.catalog.b_set.clone();
        let mut xi = XiState::Empty;
        for s in 1..t {
            let w = self.choice(s, &xi)?;
            xi = update_xi(&xi, zs[s - 1], w, ctx.inst, ctx.encoder, s, &mut beliefs)?;
        }
        let w = self.choice(t, &xi)?;
        let b = belief_id(ctx, xs, &self.catalog.b_set)?;
        let x = *xs.last().unwrap();
        w.get(x, b).ok_or_else(|| Error::MissingEntry(format!("selected partial encoder lacks ({x}, {b})")))
    }
}

/// `z_t = f_t(x_t, b_t, ξ_{t-1})` with the state advanced along stored transitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XiStructuredEncoder {
    pub catalog: Arc<XiCatalog>,
    /// Stage `t`: `(x, b-id, ξ_{t-1}-id) -> z`.
    pub table: Vec<Table<(usize, usize, usize), usize>>,
    /// Stage `t`: `(ξ_{t-1}-id, z_t) -> ξ_t-id`.
    pub next: Vec<Table<(usize, usize), usize>>,
}

impl XiStructuredEncoder {
    pub fn state_after(&self, zs: &[usize]) -> Result<usize> {
        let mut id = 0;
        for (k, &z) in zs.iter().enumerate() {
            id = *self.next[k].get(&(id, z)).ok_or_else(|| Error::MissingEntry(format!("no transition at stage {} for ({id}, {z})", k + 1)))?;
        }
        Ok(id)
    }
}

impl Encode for XiStructuredEncoder {
    fn encode(&self, ctx: &EncodeCtx<'_>, t: usize, xs: &[usize], zs: &[usize]) -> Result<usize> {
        let xi = self.state_after(zs)?;
        let b = belief_id(ctx, xs, &self.catalog.b_set)?;
        let x = *xs.last().unwrap();
        self.table[t - 1]
            .get(&(x, b, xi))
            .copied()
            .ok_or_else(|| Error::MissingEntry(format!("state-structured encoder, stage {t}, ({x}, {b}, {xi})")))
    }
}
