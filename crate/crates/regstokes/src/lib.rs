//! Configuration files, CSV and manifest output, and the command-line
//! driver for `regstokes-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod manifest;
pub mod output;

pub use config::{echo_config, parse_config, parse_config_str};
pub use error::{ConfigError, OutputError, RunError};
pub use manifest::RunManifest;
