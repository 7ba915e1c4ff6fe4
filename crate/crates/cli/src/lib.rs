//! Command-line layer for `ptdnls`: configuration, run directories, profile
//! files and the per-command drivers behind the `ptlab` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod commands;
pub mod config;
pub mod error;
pub mod json;
pub mod output;
pub mod profile;

pub use config::{Command, ExperimentConfig, Overrides};
pub use error::{CliError, CliResult};
pub use profile::ProfileFile;
