//! Pliable rejection sampling: kernel-regression envelopes built from a
//! uniform pilot phase, the matching mixture proposals, and the samplers and
//! diagnostics used by the benchmark CLI.

pub mod diagnostics;
pub mod error;
mod fastexp;
pub mod kernel;
pub mod proposal;
pub mod rng;
pub mod sampler;
pub mod targets;

pub use error::{Error, Result};
