//! Configuration, orchestration and report emission for the `normsol` binary.

pub mod config;
pub mod json;
pub mod run;

pub use config::{load_config, parse_config, ConfigError, RunConfig};
pub use run::{run, Command, RunError, RunManifest, RunOptions};
