//! Experiment driver for `jscc-core`: parameter sweeps over packet
//! sequences, plain-text and CSV file formats, and the `jscc` command line.

pub mod cli;
mod error;
pub mod experiment;
pub mod formats;
pub mod sweep;

pub use error::{SimError, SimResult};
pub use experiment::{run_experiment, ExperimentConfig, ResultRow};
