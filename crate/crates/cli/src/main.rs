mod args;
mod commands;
mod error;
mod input;
mod manifest;

use clap::Parser;
use std::process::ExitCode;

use args::{Cli, Command};
use error::CliError;

fn init_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("TICKPHYS_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Usage(format!("TICKPHYS_THREADS: expected a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("TICKPHYS_THREADS: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::Synth(a) => commands::synth::run(a),
        Command::Hurst(a) => commands::hurst::run(a),
        Command::Invstat(a) => commands::invstat::run(a),
        Command::Relax(a) => commands::relax::run(a),
        Command::Selftest(a) => commands::selftest::run(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
