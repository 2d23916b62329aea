//! Command-line front end for the `nanolink` simulator.
//!
//! Exit codes: 0 on success, 2 for configuration errors (bad file, unknown
//! key, invalid value or grid), 3 for runtime failures.

pub mod config;
pub mod output;
pub mod run;

pub use config::{parse_config, ConfigError};
pub use output::{check_csv, RunManifest};
pub use run::{run, Cli, CliError, Command};
