//! Decision rules: encoders of every form, coordinator rules, memory rules
//! and decoders, plus their JSON representation.

mod coordinated;
mod decoder;
mod detection;
mod general;
mod partial;
mod randomized;
mod structured;
mod table;

use serde::{Deserialize, Serialize};

pub use coordinated::{CommonInfoEncoder, CoordinatorEncoder, CoordinatorRule, HistoryRule, MarkovRule, XiCatalog, XiStructuredEncoder};
pub use decoder::{argmin_tied, decode_tau, Decoder, DecoderTable, TIE_TOL};
pub use detection::detection_memory_rule;
pub use general::GeneralEncoder;
pub use partial::PartialEncoder;
pub use randomized::{randomize_encoder, RandomizedEncoder};
pub use structured::{structured_encode, EncoderMarkovState, StructuredEncoder};
pub use table::Table;

use crate::error::{Error, Result};
use crate::model::{Instance, ReceiverSpec};

/// What an encoder may consult besides its own history.
#[derive(Debug, Clone, Copy)]
pub struct EncodeCtx<'a> {
    pub inst: &'a Instance,
    pub receiver: &'a ReceiverSpec,
    pub encoder: usize,
}

/// A deterministic encoding rule evaluated on the local history:
/// `xs = x_{1:t}`, `zs = z_{1:t-1}`.
pub trait Encode: Send + Sync {
    fn encode(&self, ctx: &EncodeCtx<'_>, t: usize, xs: &[usize], zs: &[usize]) -> Result<usize>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderPolicy {
    General(GeneralEncoder),
    Structured(StructuredEncoder),
    CommonInfo(CommonInfoEncoder),
    Coordinator(CoordinatorEncoder),
    XiStructured(XiStructuredEncoder),
    Randomized(RandomizedEncoder),
}

impl EncoderPolicy {
    /// Mixture components with weights; a deterministic policy is its own
    /// single component.
    pub fn components(&self) -> Vec<(f64, &dyn Encode)> {
        match self {
            EncoderPolicy::General(e) => vec![(1.0, e as &dyn Encode)],
            EncoderPolicy::Structured(e) => vec![(1.0, e as &dyn Encode)],
            EncoderPolicy::CommonInfo(e) => vec![(1.0, e as &dyn Encode)],
            EncoderPolicy::Coordinator(e) => vec![(1.0, e as &dyn Encode)],
            EncoderPolicy::XiStructured(e) => vec![(1.0, e as &dyn Encode)],
            EncoderPolicy::Randomized(r) => r.components.iter().map(|(w, e)| (*w, e as &dyn Encode)).collect(),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        !matches!(self, EncoderPolicy::Randomized(_))
    }
}

impl Encode for EncoderPolicy {
    fn encode(&self, ctx: &EncodeCtx<'_>, t: usize, xs: &[usize], zs: &[usize]) -> Result<usize> {
        match self.components().as_slice() {
            [(_, e)] => e.encode(ctx, t, xs, zs),
            _ => Err(Error::InvalidArgument("randomized encoder has no single output; sample a component".into())),
        }
    }
}

/// A complete set of decision rules for an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyFile {
    pub encoders: Vec<EncoderPolicy>,
    /// Replaces the instance's memory rules when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub receiver: Option<ReceiverSpec>,
    pub decoder: Decoder,
}

impl PolicyFile {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("policy serializes")
    }
}
