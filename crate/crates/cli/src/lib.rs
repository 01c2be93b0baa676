//! Configuration, pipelines and file formats behind the `revmix` binary.

pub mod catalog;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::{parse_config, parse_config_with, parse_override, RunConfig};
pub use error::CliError;
