use serde::{Deserialize, Serialize};

/// A per-stage table, either shared by every stage or listed stage by stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Staged<T> {
    Invariant(T),
    Stages(Vec<T>),
}

impl<T> Staged<T> {
    /// Table for 0-based stage slot `k`.
    pub fn at(&self, k: usize) -> &T {
        match self {
            Staged::Invariant(v) => v,
            Staged::Stages(v) => &v[k],
        }
    }

    pub fn get(&self, k: usize) -> Option<&T> {
        match self {
            Staged::Invariant(v) => Some(v),
            Staged::Stages(v) => v.get(k),
        }
    }

    pub fn listed_len(&self) -> Option<usize> {
        match self {
            Staged::Invariant(_) => None,
            Staged::Stages(v) => Some(v.len()),
        }
    }

    /// All distinct stored tables with the slot label used in error paths.
    pub fn stored(&self) -> Vec<(usize, &T)> {
        match self {
            Staged::Invariant(v) => vec![(0, v)],
            Staged::Stages(v) => v.iter().enumerate().collect(),
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> Staged<U> {
        match self {
            Staged::Invariant(v) => Staged::Invariant(f(v)),
            Staged::Stages(v) => Staged::Stages(v.iter().map(f).collect()),
        }
    }

    pub fn try_map<U, E>(&self, mut f: impl FnMut(&T) -> Result<U, E>) -> Result<Staged<U>, E> {
        Ok(match self {
            Staged::Invariant(v) => Staged::Invariant(f(v)?),
            Staged::Stages(v) => Staged::Stages(v.iter().map(f).collect::<Result<_, _>>()?),
        })
    }
}

impl<T: Clone> Staged<T> {
    /// Expand to an explicit list of `n` stages.
    pub fn expand(&self, n: usize) -> Vec<T> {
        (0..n).map(|k| self.at(k).clone()).collect()
    }
}
