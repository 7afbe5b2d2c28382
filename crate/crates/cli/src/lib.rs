//! Command-line driver: configs, presets, dispatch and report artifacts.

pub mod config;
pub mod params;
pub mod run;

pub use config::{parse_config, ConfigError, Experiment, RunConfig};
pub use params::{preset, preset_names, resolve, Resolved};
pub use run::{execute, exit_code, pretty_report, write_artifacts, Failure, RunError};
