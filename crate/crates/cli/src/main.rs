mod cli;
mod commands;
mod config;
mod failure;

use std::process::ExitCode;

use clap::Parser;

use cli::{Cli, Command};
use config::Settings;
use failure::Failure;

fn run(cli: &Cli) -> Result<(), Failure> {
    let settings = Settings::resolve(&cli.options)?;
    match cli.command {
        Command::Score => commands::score(&settings),
        Command::Grid => commands::grid(&settings),
        Command::Stats => commands::stats(&settings),
        Command::Synth => commands::synth(&settings),
        Command::Validate => commands::validate(&settings),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("slide: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
