//! Config-driven runner for the `schwarz_coupler` solvers.
//!
//! A JSON config describes the partition, kernel, source, mesh and solver.
//! [`run_from_config`] validates it, assembles the system, runs the
//! requested solver and writes CSV data, a JSON summary and SVG plots.

pub mod config;
pub mod error;
pub mod output;
pub mod plot;
mod run;

pub use config::RunConfig;
pub use error::CliError;
pub use run::{configure_threads, run_from_config, Command, RunOptions, RunSummary};
