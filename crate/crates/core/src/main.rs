use std::process::ExitCode;

use clap::Parser;

use erpx::cli::{run, Cli};
use erpx::error::ErpxError;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("erpx {}: {e}", cli.command.name());
            match e {
                ErpxError::Config(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
