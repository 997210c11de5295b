//! Problem instances: alphabets, source law, channels, receiver memory and distortion.

mod instance;
pub mod random;
mod staged;
pub mod transforms;
mod tuples;
mod validate;

pub use instance::*;
pub use staged::Staged;
pub use transforms::{degenerate_p4, lift_delay, lift_kth_order, observe_a_at_encoder, KthOrderKernels};
pub use tuples::TupleSpace;
pub use validate::{validate, ValidationReport, Violation, ROW_TOL};
