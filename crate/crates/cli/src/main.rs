use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use spacearm_cli::cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match spacearm_cli::run(&cli) {
        Ok(summary) => {
            let text = serde_json::to_string_pretty(&summary).unwrap_or_default();
            // A closed pipe is not a failure of the command.
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
