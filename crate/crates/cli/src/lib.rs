//! Configuration, material presets and the batch harness behind the
//! `transeig` command.

pub mod config;
pub mod expr;
pub mod run;

pub use config::{parse_config, ConfigError, RunConfig};
