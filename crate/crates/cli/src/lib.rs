//! Experiment harness for the `htdp` estimators, SCO drivers and lower-bound
//! constructions: JSON configs, parameter sweeps, Monte Carlo trials and
//! CSV/JSON results.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
mod error;
pub mod ids;
pub mod output;
pub mod runner;
pub mod summary;

pub use config::{CalibrationMode, ExperimentConfig, OutputFormat, Task};
pub use error::{CliError, Result};
pub use runner::{run_experiment, ResultRow};
pub use summary::{summarize, SummaryRow};
