use serde::{Deserialize, Serialize};

use super::general::GeneralEncoder;
use crate::error::{Error, Result};
use crate::model::ROW_TOL;

/// Finite mixture of deterministic encoders; the component is drawn once,
/// independently of everything else, before stage 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomizedEncoder {
    pub components: Vec<(f64, GeneralEncoder)>,
}

pub fn randomize_encoder(mix: Vec<(GeneralEncoder, f64)>) -> Result<RandomizedEncoder> {
    if mix.is_empty() || mix.iter().any(|(_, w)| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidArgument("mixture weights must be non-negative".into()));
    }
    let s: f64 = mix.iter().map(|(_, w)| w).sum();
    if (s - 1.0).abs() > ROW_TOL {
        return Err(Error::InvalidArgument(format!("mixture weights sum to {s}")));
    }
    Ok(RandomizedEncoder { components: mix.into_iter().map(|(e, w)| (w, e)).collect() })
}
