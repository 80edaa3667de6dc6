//! `revpath` command-line front end. Every run writes its CSV outputs and a
//! `manifest.json` into `--out`; `replay` re-runs a manifest.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on numerical failures.

mod args;
mod commands;
mod figures;
mod manifest;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;

/// Failure classes that map onto exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numeric(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<revpath::Error> for CliError {
    fn from(e: revpath::Error) -> Self {
        use revpath::Error as E;
        match e {
            E::Parse { .. }
            | E::InvalidNetwork(_)
            | E::IndexOutOfRange { .. }
            | E::InvalidArgument(_)
            | E::Unsupported(_)
            | E::ShapeMismatch(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Numeric(format!("i/o: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn configure_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("REVPATH_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| CliError::Usage(format!("REVPATH_THREADS must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Numeric(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = configure_threads().and_then(|_| commands::run(cli, &argv[1..]));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("revpath: {e}");
            ExitCode::from(e.code())
        }
    }
}
