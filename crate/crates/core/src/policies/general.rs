use serde::{Deserialize, Serialize};

use super::table::Table;
use super::{Encode, EncodeCtx};
use crate::error::{Error, Result};

/// Per-stage table `(x_{1:t}, z_{1:t-1}) -> z_t`, stored on reachable histories.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneralEncoder {
    pub stages: Vec<Table<(Vec<usize>, Vec<usize>), usize>>,
}

impl GeneralEncoder {
    pub fn new(horizon: usize) -> Self {
        Self { stages: vec![Table::default(); horizon] }
    }

    pub fn set(&mut self, xs: &[usize], zs: &[usize], z: usize) {
        self.stages[xs.len() - 1].insert((xs.to_vec(), zs.to_vec()), z);
    }
}

impl Encode for GeneralEncoder {
    fn encode(&self, _ctx: &EncodeCtx<'_>, t: usize, xs: &[usize], zs: &[usize]) -> Result<usize> {
        self.stages
            .get(t - 1)
            .and_then(|s| s.get(&(xs.to_vec(), zs.to_vec())))
            .copied()
            .ok_or_else(|| Error::MissingEntry(format!("general encoder, stage {t}, history {xs:?}/{zs:?}")))
    }
}
