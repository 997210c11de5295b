//! Brute-force ground truth on tiny instances: global optima, structural
//! checks for encoders and decoders, the Markov property of the encoder state
//! and the absence of gains from randomization.

mod decoders;
mod global;
mod lemma3;
mod randomization;
pub mod search;

pub use decoders::{verify_theorem2, DecoderReport, DecoderSearch};
pub use global::{enumerate_global_optimum, verify_theorem1, EnumerationCounts, GlobalOptimum, StructureReport, GAP_TOL};
pub use lemma3::{verify_lemma3_markov, BeliefVariant, MarkovReport, MARKOV_TOL};
pub use randomization::{verify_no_randomization_gain, RandomizationReport, LINEARITY_TOL};
pub use search::SearchBudget;
