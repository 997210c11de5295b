//! Belief objects and their recursions, with direct-by-enumeration counterparts.

mod a_belief;
mod canonical;
mod delta;
mod direct;
mod memory;
mod pmf;
mod xi;

pub use a_belief::{a_belief_of_path, init_a_belief, tracked_a_belief_of_path, update_a_belief, ABelief};
pub use canonical::{CanonicalBeliefSet, DEDUP_TOL};
pub use delta::{coordinator_stage_cost, psi_from_xi, SideForward};
pub use direct::{local_atoms, receiver_belief_direct, LocalAtom, DIRECT_ATOM_LIMIT};
pub use memory::{memory_belief_of_path, update_memory_belief, MemoryBelief, StageRule};
pub use pmf::{linf, Pmf};
pub use xi::{condition_xi, predict_xi, update_xi, xi_dense, XiEntry, XiPrediction, XiState};

/// Receiver belief over joint states `(x^1, .., x^n, a)`.
pub type SourceBelief = Pmf;
