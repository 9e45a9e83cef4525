//! Experiment harness for the `ssa-core` sensor-management agent: TOML
//! configuration, network checkpoints, CSV artifacts, and the repeated-run
//! protocol behind the `ssa` command line.

pub mod artifacts;
pub mod checkpoint;
pub mod config;
pub mod experiment;

pub use config::ExperimentConfig;
