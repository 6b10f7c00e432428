//! Experiment driver: JSON configs in, deterministic CSV/JSON outputs and a
//! run manifest out.

pub mod cache;
pub mod config;
pub mod error;
pub mod manifest;
pub mod output;
pub mod run;

pub use config::{Experiment, ExperimentConfig};
pub use error::{HarnessError, Result};
pub use manifest::RunManifest;
pub use run::{run, RunOptions};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
