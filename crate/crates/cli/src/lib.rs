//! Command-line front end for the rotor annulus models: JSON configuration,
//! experiment drivers and reproducible CSV/JSON export.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{run, Options, Verb};
pub use config::{LoadedConfig, RunConfig};
pub use error::{CliError, CliResult};
