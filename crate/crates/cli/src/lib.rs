//! Experiment harness: JSON configs in, CSV tables out.

pub mod config;
pub mod error;
pub mod harness;
pub mod output;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::{CliError, Result};
pub use harness::{run, RunOutput};
