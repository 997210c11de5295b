//! Exact analysis of real-time coding systems in which several encoders
//! observe Markov chains coupled through a hidden, time-invariant variable and
//! a single receiver with separated finite memories produces estimates.

pub mod beliefs;
pub mod cli;
pub mod coordinator;
pub mod engine;
pub mod error;
pub mod model;
pub mod oracle;
pub mod policies;

pub use error::{Error, Result};
