//! Configuration-driven driver for the `dnaga` library: scenario generation,
//! analysis, simulation, comparison and deployment-level runs, all writing
//! CSV artifacts.

pub mod commands;
pub mod config;
mod error;

pub use commands::MacroMode;
pub use config::RunConfig;
pub use error::CliError;
