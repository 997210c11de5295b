use serde::{Deserialize, Serialize};

use super::pmf::Pmf;

pub const DEDUP_TOL: f64 = 1e-9;

/// Ordered set of distinct beliefs with tolerance-based identity.
/// With `grid = Some(r)` two-point beliefs are snapped to multiples of `1/r`
/// before interning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalBeliefSet {
    items: Vec<Pmf>,
    tol: f64,
    grid: Option<usize>,
}

impl Default for CanonicalBeliefSet {
    fn default() -> Self {
        Self::new()
    }
}

impl CanonicalBeliefSet {
    pub fn new() -> Self {
        Self { items: Vec::new(), tol: DEDUP_TOL, grid: None }
    }

    pub fn with_grid(resolution: usize) -> Self {
        Self { grid: Some(resolution.max(1)), ..Self::new() }
    }

    pub fn grid(&self) -> Option<usize> {
        self.grid
    }

    /// Snap to the grid if one is configured and the belief is binary.
    pub fn project(&self, p: &Pmf) -> Pmf {
        match self.grid {
            Some(r) if p.len() == 2 => {
                let p0 = (p[0] * r as f64).round() / r as f64;
                Pmf::new(vec![p0, 1.0 - p0]).unwrap_or_else(|_| p.clone())
            }
            _ => p.clone(),
        }
    }

    pub fn find(&self, p: &Pmf) -> Option<usize> {
        let q = self.project(p);
        self.items.iter().position(|it| it.len() == q.len() && it.linf(&q) <= self.tol)
    }

    pub fn intern(&mut self, p: &Pmf) -> usize {
        if let Some(id) = self.find(p) {
            return id;
        }
        self.items.push(self.project(p));
        self.items.len() - 1
    }

    pub fn get(&self, id: usize) -> &Pmf {
        &self.items[id]
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Pmf> {
        self.items.iter()
    }
}
