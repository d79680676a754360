//! Experiment runner for the `wavedecay` simulator: TOML configs in,
//! CSV time series, JSON verdicts and plot-ready data out.

pub mod config;
pub mod error;
pub mod experiment;
pub mod report;
pub mod suites;

pub use config::ExperimentConfig;
pub use error::CliError;
pub use experiment::{run_experiment, RunOptions, RunSummary};
pub use report::report;
pub use suites::verify_suite;
