//! Command-line front end for the RIS channel simulator: config files,
//! channel dumps, rate tables, heatmaps and scenario checks.

pub mod commands;
pub mod config;
pub mod error;

pub use config::{parse_config, ConfigFile, RunConfig};
pub use error::{CliError, Result};
