//! Command-line front end: argument parsing, command dispatch and exit codes.

pub mod args;
pub mod commands;
pub mod output;
pub mod selftest;

use std::ffi::OsString;
use std::process::ExitCode;

use anyhow::{Context, Result};
use chrono::Utc;
use clap::Parser;
use serde_json::json;

use crate::args::{Cli, Command, Common};
use crate::commands::{ScalingPlan, UsageError};
use crate::output::{RunManifest, Sink};

pub const EXIT_OK: u8 = 0;
pub const EXIT_SELFTEST: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    match execute(&cli) {
        Ok(None) => ExitCode::from(EXIT_OK),
        Ok(Some(failure)) => {
            eprintln!("selftest failed: {}: {}", failure.check, failure.detail);
            ExitCode::from(EXIT_SELFTEST)
        }
        Err(e) if is_broken_pipe(&e) => ExitCode::from(EXIT_OK),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

// A closed stdout (e.g. piping into `head`) is not a failure.
fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|cause| {
        let io = cause.downcast_ref::<std::io::Error>().or_else(|| match cause.downcast_ref::<csv::Error>()?.kind() {
            csv::ErrorKind::Io(io) => Some(io),
            _ => None,
        });
        io.is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
    })
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<UsageError>() {
            return EXIT_USAGE;
        }
        if let Some(oupexit::Error::Domain(_)) = cause.downcast_ref::<oupexit::Error>() {
            return EXIT_USAGE;
        }
    }
    EXIT_NUMERICAL
}

fn execute(cli: &Cli) -> Result<Option<selftest::Failure>> {
    let common = &cli.common;
    let pool = match common.threads {
        Some(0) => return Err(UsageError("--threads must be at least 1".into()).into()),
        Some(n) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .context("cannot start worker threads")?,
        ),
        None => None,
    };
    match pool {
        Some(pool) => pool.install(|| dispatch(cli, common)),
        None => dispatch(cli, common),
    }
}

fn dispatch(cli: &Cli, common: &Common) -> Result<Option<selftest::Failure>> {
    let started = Utc::now();
    let allow_huge = common.allow_huge_d;
    let (name, parameters) = describe(&cli.command, allow_huge)?;
    let mut sink = Sink::open(common.format, common.output.as_deref())?;
    let outcome = match &cli.command {
        Command::Mfet(a) => commands::mfet(a, false, allow_huge, &mut sink).map(|_| None),
        Command::Bounds(a) => commands::mfet(a, true, allow_huge, &mut sink).map(|_| None),
        Command::Scaling(a) => {
            let plan = ScalingPlan::resolve(a, allow_huge)?;
            commands::scaling(&plan, common.seed, &mut sink).map(|_| None)
        }
        Command::Trajectories(a) => commands::trajectories(a, common.seed, allow_huge, &mut sink).map(|_| None),
        Command::DriftRatio(a) => commands::drift_ratio_table(a, allow_huge, &mut sink).map(|_| None),
        Command::Selftest(a) => selftest::run(a, &mut sink),
    };
    // Whatever was produced is flushed, even when the command failed part-way.
    let flushed = if matches!(cli.command, Command::Mfet(_) | Command::Bounds(_)) {
        sink.single_record().finish()
    } else {
        sink.finish()
    };
    let outcome = outcome?;
    flushed?;
    if let Some(path) = &common.output {
        RunManifest {
            command: name.to_string(),
            parameters,
            seed: common.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started,
            finished: Utc::now(),
        }
        .write_next_to(path)?;
    }
    Ok(outcome)
}

/// Command name and its fully resolved parameters, for the manifest.
fn describe(command: &Command, allow_huge: bool) -> Result<(&'static str, serde_json::Value)> {
    Ok(match command {
        Command::Mfet(a) | Command::Bounds(a) => (
            if matches!(command, Command::Mfet(_)) { "mfet" } else { "bounds" },
            json!({ "d": a.d, "L": a.l, "x": a.x, "sigma": a.sigma, "theta": a.theta, "rel_tol": a.rel_tol }),
        ),
        Command::Scaling(a) => ("scaling", serde_json::to_value(ScalingPlan::resolve(a, allow_huge)?)?),
        Command::Trajectories(a) => (
            "trajectories",
            json!({
                "d": a.d, "L": a.l, "x": a.x, "sigma": a.sigma, "theta": a.theta, "dt": a.dt,
                "stride": a.stride, "t_max": a.t_max, "scheme": a.scheme,
            }),
        ),
        Command::DriftRatio(a) => (
            "drift-ratio",
            json!({
                "theta": a.theta, "sigma": a.sigma, "L": a.l, "rho_max": commands::resolve_rho_max(a),
                "points": a.points, "d_list": a.d_list,
            }),
        ),
        Command::Selftest(a) => ("selftest", json!({ "fast": a.fast })),
    })
}
