//! `pixdiff` command-line front end.
//!
//! Exit status: 0 on success, 1 when a check fails or the run hits a runtime
//! error, 2 on a usage error.

mod args;
mod commands;
mod output;

use std::fmt;
use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};

/// Error in the invocation rather than in the data.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

/// Whether every check of a command passed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Self::Pass
        } else {
            Self::Fail
        }
    }
}

const THREADS_VAR: &str = "PIXDIFF_THREADS";

/// Thread cap from the environment, if set.
pub fn thread_cap() -> anyhow::Result<Option<usize>> {
    match std::env::var(THREADS_VAR) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Usage(format!(
                "{THREADS_VAR} must be a positive integer, got {v:?}"
            ))
            .into()),
        },
        Err(_) => Ok(None),
    }
}

fn init_threads() -> anyhow::Result<()> {
    let cap = thread_cap()?;
    #[cfg(feature = "parallel")]
    if let Some(n) = cap {
        // Fails only if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = cap;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    init_threads()?;
    match cli.command {
        Command::LbpHist(a) => commands::lbp_hist(&a),
        Command::PdcRun(a) => commands::pdc_run(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Bench(a) => commands::bench(&a),
        Command::Gradcheck(a) => commands::gradcheck(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) if e.is::<Usage>() => {
            eprintln!("pixdiff: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("pixdiff: {e:#}");
            ExitCode::from(1)
        }
    }
}
