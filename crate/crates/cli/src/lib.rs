//! Command-line driver: config parsing, command dispatch and run manifests.

pub mod commands;
pub mod config;
pub mod manifest;

pub use commands::{run, Command, OutFormat, Outcome};
pub use config::{parse_config, parse_config_str, Config, ConfigError, Format};
pub use manifest::{Outputs, RunManifest};

/// Exit status for a completed run whose asserted metrics did not all pass.
pub const EXIT_METRIC_FAILURE: u8 = 3;
/// Exit status for configuration, precondition and I/O errors.
pub const EXIT_ERROR: u8 = 1;
