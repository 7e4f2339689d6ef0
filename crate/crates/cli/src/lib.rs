//! Config-driven runner for the factfind experiments.

pub mod config;
pub mod report;
pub mod run;

pub use config::{load_config, parse_config, ConfigError, RunConfig};
pub use run::{execute, run, RunError, RunOptions};
