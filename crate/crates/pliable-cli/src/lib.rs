//! Benchmark harness around the `pliable` sampling library: configuration
//! parsing, experiment orchestration, H_C tuning, result persistence, and
//! the self-check suite.

pub mod config;
pub mod experiment;
pub mod report;
pub mod tune;
pub mod validate;
