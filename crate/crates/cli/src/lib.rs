//! Experiment driver: reads a TOML config, runs one mode and writes CSV
//! outputs plus a JSON manifest.

pub mod config;
pub mod error;
pub mod run;

pub use config::{ExperimentConfig, Mode, Options};
pub use error::CliError;
pub use run::{run, RunManifest, RunOptions, SizeSummary, MANIFEST_FILE};
