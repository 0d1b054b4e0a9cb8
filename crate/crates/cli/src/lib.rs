//! Command-line driver for the bilevel reconstruction experiments: reads a
//! TOML config, builds the simulated testbed, runs the solvers and writes
//! CSV traces, images and comparison tables.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod testbed;

pub use config::{Command, ExperimentConfig, Overrides};
pub use error::CliError;
