use super::pmf::Pmf;
use crate::error::{Error, Result};
use crate::model::{Instance, Kernel};

/// Posterior on the latent variable given one encoder's observations.
pub type ABelief = Pmf;

/// Stage-1 belief: proportional to `P(x_1 | a) P(a)`.
pub fn init_a_belief(inst: &Instance, i: usize, x1: usize) -> Result<ABelief> {
    if x1 >= inst.x_size(i) {
        return Err(Error::InvalidArgument(format!("symbol {x1} out of range")));
    }
    let w = inst.a_prior().iter().zip(inst.init(i)).map(|(p, row)| p * row[x1]).collect();
    Pmf::from_weights(w, "first observation has zero probability")
}

/// One Bayes step: proportional to `P(x_curr | x_prev, a) * prev(a)`.
pub fn update_a_belief(prev: &ABelief, x_prev: usize, x_curr: usize, kernel: &Kernel) -> Result<ABelief> {
    if kernel.len() != prev.len() {
        return Err(Error::InvalidArgument("kernel and belief disagree on |A|".into()));
    }
    let w = (0..prev.len()).map(|a| prev[a] * kernel[a][x_prev][x_curr]).collect();
    Pmf::from_weights(w, "transition has zero probability under every value of A")
}

/// Belief after the observation path `xs` (stages `1..=xs.len()`).
pub fn a_belief_of_path(inst: &Instance, i: usize, xs: &[usize]) -> Result<ABelief> {
    let mut b = init_a_belief(inst, i, xs[0])?;
    for t in 1..xs.len() {
        b = update_a_belief(&b, xs[t - 1], xs[t], inst.kernel(i, t))?;
    }
    Ok(b)
}

/// Same recursion with each step projected through `set` (identity unless a
/// grid is configured).
pub fn tracked_a_belief_of_path(inst: &Instance, i: usize, xs: &[usize], set: &super::CanonicalBeliefSet) -> Result<ABelief> {
    let mut b = set.project(&init_a_belief(inst, i, xs[0])?);
    for t in 1..xs.len() {
        b = set.project(&update_a_belief(&b, xs[t - 1], xs[t], inst.kernel(i, t))?);
    }
    Ok(b)
}
