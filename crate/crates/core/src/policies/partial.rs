use serde::{Deserialize, Serialize};

use super::table::Table;

/// Map from `(x, belief-id)` to a channel symbol for one stage and one
/// realization of the common history.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PartialEncoder(pub Table<(usize, usize), usize>);

impl PartialEncoder {
    pub fn get(&self, x: usize, b: usize) -> Option<usize> {
        self.0.get(&(x, b)).copied()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = ((usize, usize), usize)>) -> Self {
        Self(pairs.into_iter().collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}
