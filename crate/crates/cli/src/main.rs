mod commands;
mod options;

use std::process::ExitCode;

use clap::Parser;

use options::{Cli, Command};

/// Exit status for a verified certificate.
const EXIT_VERIFIED: u8 = 0;
/// Exit status for a run that finished without a certificate.
const EXIT_UNVERIFIED: u8 = 1;
/// Exit status for invalid input.
const EXIT_USAGE: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(args) => commands::train(args),
        Command::Verify(args) => commands::verify(args),
        Command::Bench(args) => commands::bench(args),
        Command::ExportLevelset(args) => commands::export_levelset(args),
    };
    match result {
        Ok(true) => ExitCode::from(EXIT_VERIFIED),
        Ok(false) => ExitCode::from(EXIT_UNVERIFIED),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
