//! Command-line front end: `carnot <module> <command>`.

pub mod args;
pub mod commands;
pub mod output;
pub mod suite;

use args::{Cli, Command};
use clap::Parser;
use commands::{CliError, Context, Outcome};
use std::io::Write;

/// Seed used when neither `--seed` nor `CARNOT_SEED` is given.
pub const DEFAULT_SEED: u64 = 24301;

/// `CARNOT_SEED` beats `--seed`, which beats the default.
pub fn resolve_seed(flag: Option<u64>, env: Option<&str>) -> Result<u64, CliError> {
    match env {
        Some(s) => s.trim().parse().map_err(|_| CliError::Usage(format!("CARNOT_SEED must be an unsigned integer, got `{s}`"))),
        None => Ok(flag.unwrap_or(DEFAULT_SEED)),
    }
}

fn emit(text: &str, out: Option<&str>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Usage(format!("cannot write `{path}`: {e}"))),
        None => {
            let mut so = std::io::stdout().lock();
            // A closed pipe is not an error worth reporting.
            let _ = so.write_all(text.as_bytes()).and_then(|_| so.flush());
            Ok(())
        }
    }
}

fn dispatch(cli: &Cli) -> Result<bool, CliError> {
    let env = std::env::var("CARNOT_SEED").ok();
    let g = &cli.global;
    let ctx = Context { group_name: g.group.clone(), n: g.n, precision: g.precision, seed: resolve_seed(g.seed, env.as_deref())? };
    let outcome: Outcome = match &cli.command {
        Command::Algebra(c) => commands::algebra(&ctx, c)?,
        Command::Group(c) => commands::group(&ctx, c)?,
        Command::Fields(c) => commands::fields(&ctx, c)?,
        Command::Rewrite(c) => commands::rewrite(c)?,
        Command::Verify(c) => commands::verify(&ctx, c)?,
        Command::Suite => commands::suite(&ctx),
        Command::Solve(a) => {
            let (outcome, table) = commands::solve(&ctx, a)?;
            match &g.out {
                Some(path) => emit(&table, Some(path))?,
                None if g.format == output::Format::Csv => {
                    emit(&table, None)?;
                    return Ok(outcome.ok);
                }
                None => {}
            }
            emit(&output::render(&outcome.report, g.format), None)?;
            return Ok(outcome.ok);
        }
    };
    emit(&output::render(&outcome.report, g.format), g.out.as_deref())?;
    Ok(outcome.ok)
}

/// Exit codes: 0 success, 1 failed check or computation, 2 usage or input error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}
