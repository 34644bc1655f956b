//! Batch front end: JSON run configurations in, JSON and CSV artifacts out.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{run, Artifacts, Command, Table, SCHEMA_VERSION};
pub use config::{load_config, Format, ModeMethod, ModeOptions, OutputOptions, RunConfig};
pub use error::CliError;
