//! Exact and sampled evaluation of complete systems.

mod exact;
mod marginals;
mod mc;
mod tree;

pub use exact::*;
pub use marginals::{encoder_marginals, encoder_marginals_with_laws, memory_laws, EncoderMarginals, StageMarginal};
pub use mc::{simulate_mc, simulate_mc_with, trace_rollout, TraceStage, Trajectory, SHARD_SIZE};
pub use tree::{PrefixNode, PrefixTree};
