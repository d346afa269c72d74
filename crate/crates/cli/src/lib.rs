//! Driver for the `fiiss` command-line tool.

pub mod config;
mod commands;
mod output;

use std::ffi::OsString;

use clap::Parser;
use fiiss::FiissError;

pub use config::{Cli, Command, Format, RunConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit codes.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Check(String),
    Core(FiissError),
}

impl From<FiissError> for CliError {
    fn from(e: FiissError) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => EXIT_USAGE,
            CliError::Check(_) => EXIT_CHECK_FAILED,
            CliError::Core(FiissError::Resource(_)) => EXIT_RESOURCE,
            CliError::Core(FiissError::Domain(_)) => EXIT_USAGE,
            CliError::Core(_) => EXIT_CHECK_FAILED,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Check(_) => "check",
            CliError::Core(FiissError::Resource(_)) => "resource",
            CliError::Core(FiissError::Domain(_)) => "domain",
            CliError::Core(FiissError::Range(_)) => "range",
            CliError::Core(FiissError::Window(_)) => "window",
            CliError::Core(FiissError::EmptySample) => "empty_sample",
        }
    }

    /// Machine-readable error record.
    pub fn record(&self) -> String {
        let message = match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Check(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        };
        serde_json::json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": message,
        })
        .to_string()
    }
}

/// Whether every check of a run passed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

/// Runs a configured command inside a pool of `config.streams` workers.
pub fn run(config: &RunConfig) -> Result<Outcome, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.streams)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", config.streams)))?;
    pool.install(|| commands::dispatch(config))
}

/// Parses `args`, runs, reports errors on stderr and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_PASS;
            }
            eprintln!("{}", CliError::Usage(e.to_string().trim().to_string()).record());
            return EXIT_USAGE;
        }
    };
    let outcome = RunConfig::from_cli(cli).and_then(|config| run(&config));
    match outcome {
        Ok(Outcome::Pass) => EXIT_PASS,
        Ok(Outcome::Fail) => EXIT_CHECK_FAILED,
        Err(e) => {
            eprintln!("{}", e.record());
            e.exit_code()
        }
    }
}
