//! Operator surface: configuration, subcommands, output files.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{
    cmd_ensemble, cmd_intervene, cmd_simulate, cmd_sweep, cmd_validate, run_command, CliError, CommandReport,
};
pub use config::{OutputFormat, Overrides, RunConfig};
