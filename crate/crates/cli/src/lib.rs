//! Command-line front end for `snetcalc`: configuration, sweeps and
//! simulation reports.

pub mod commands;
pub mod config;
pub mod report;

pub use commands::{run, Cli, CliError, Command};
pub use config::{AnalysisConfig, ConfigError};
pub use report::{read_rows, write_rows, Method, Provenance, ReportRow, Status, Sweep, SENTINEL};
