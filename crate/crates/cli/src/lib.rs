//! Command-line front end for `crowdsim-core`.
//!
//! `crowdsim <command> [--preset NAME] [--config FILE] [--key value ...] --out DIR`
//! writes CSV tables, `summary.json` and a `manifest.json` listing every file
//! with its SHA-256. Exit codes: 0 success, 2 usage error, 3 numerical failure,
//! 4 model breakdown (`rho > 1`).

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod grammar;
pub mod output;

use std::ffi::OsString;
use std::time::Instant;

pub use config::{parse_config, Command, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Clap(#[from] clap::Error),
    #[error("{0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl From<crowdsim_core::Error> for CliError {
    fn from(e: crowdsim_core::Error) -> Self {
        match e {
            crowdsim_core::Error::Config(m) => CliError::Usage(m),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Clap(e) if !e.use_stderr() => 0,
            CliError::Clap(_) => 2,
            _ => 3,
        }
    }
}

/// Wraps a grammar error as a usage error naming `key`.
pub(crate) fn keyed(key: &str) -> impl FnOnce(String) -> CliError + '_ {
    move |e| CliError::Usage(format!("--{key}: {e}"))
}

/// Runs one invocation and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match parse_config(args) {
        Ok(c) => c,
        Err(CliError::Clap(e)) => {
            let _ = e.print();
            return CliError::Clap(e).exit_code();
        }
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let start = Instant::now();
    let result = commands::execute(&cfg)
        .and_then(|b| output::emit(&b, &cfg, start.elapsed().as_secs_f64()).map(|_| b));
    match result {
        Ok(b) => {
            if let Some(e) = &b.error {
                eprintln!("error: {e}");
            }
            eprintln!("{}: {}", cfg.command.name(), b.status.as_str());
            b.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
