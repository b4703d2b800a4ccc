//! Command-line front end of the `dwlattice` simulator: layered TOML
//! configuration, one subcommand per experiment, CSV and JSON outputs and
//! a checksummed run manifest.

pub mod cli;
pub mod commands;
pub mod config;
pub mod output;

pub use cli::run;
