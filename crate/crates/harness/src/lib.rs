//! Configuration, experiments and output for the `exsim` command line.

pub mod config;
pub mod experiments;
pub mod output;

pub use config::ExperimentConfig;
