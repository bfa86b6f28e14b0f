//! Command-line front end: configuration, run directories, metrics files
//! and the subcommands of the `spacearm` binary.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod metrics;
pub mod model;
pub mod runs;
pub mod workers;

pub use error::{CliError, Result};

use cli::{Cli, Command};

/// Runs one parsed command and returns its JSON summary.
pub fn run(cli: &Cli) -> Result<serde_json::Value> {
    match &cli.command {
        Command::Train(a) => commands::train::run(a),
        Command::Eval(a) => commands::evaluate::eval(a),
        Command::SweepMass(a) => commands::evaluate::sweep_mass(a),
        Command::Disturb(a) => commands::evaluate::disturb(a),
        Command::ReassembleEval(a) => commands::reassemble::reassemble_eval(a),
        Command::ExportTrace(a) => commands::evaluate::export_trace(a),
    }
}
