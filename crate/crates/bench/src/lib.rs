//! Config-driven benchmark runner for the Schmidt-spectrum estimators.

pub mod config;
pub mod presets;
pub mod run;

pub use config::{ConfigError, ExperimentConfig};
pub use run::{execute, RunError, RunSummary};
