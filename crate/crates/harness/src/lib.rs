//! Experiment harness for the aflow solver: TOML configuration, the five
//! experiment drivers, exponent fitting, CSV/JSON artifacts and the CLI.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod output;
pub mod verification;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use output::{Check, Verdict};
