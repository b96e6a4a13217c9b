//! Command-line front end: scenario runs, sweeps, the check corpus and
//! rate fits.
//!
//! Exit codes: 0 success, 1 assertion or invariant failure, 2 configuration
//! error.

pub mod scenario;
pub mod suite;
pub mod sweep;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use scenario::{load_scenario, ScenarioError};
use suite::{check_suite, SuiteOptions, DEFAULT_SEED, DEFAULT_SIZE};
use sweep::{fit_loglog, gnuplot_script, read_table, run_sweep, to_csv};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ScenarioError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failure(_) => 1,
            CliError::Config(_) | CliError::Usage(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "zenolab", version, about = "Continuous measurement along a moving basis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and print a JSON summary with rate fits.
    Run { scenario: PathBuf },
    /// Run a scenario and write the sweep CSV (to `output` or stdout).
    Sweep {
        scenario: PathBuf,
        /// Overrides the scenario's output path; `-` for stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the seeded scenario corpus.
    Check {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_SIZE)]
        size: usize,
        /// Replay a single case index.
        #[arg(long)]
        only: Option<usize>,
        /// Drop a projector from this case's measurement families.
        #[arg(long, hide = true)]
        corrupt_projector: Option<usize>,
    },
    /// Fit ln(value) = slope ln(N) + intercept on a sweep CSV column.
    Rate {
        csv: PathBuf,
        #[arg(long)]
        column: String,
    },
    /// Print a gnuplot script for columns of a sweep CSV.
    Plot {
        csv: PathBuf,
        #[arg(long, num_args = 1.., default_values_t = ["trace_distance".to_string(), "trace_bound".to_string()])]
        column: Vec<String>,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn usage(e: crate::Error) -> CliError {
    CliError::Usage(e.to_string())
}

/// Executes a parsed command, writing normal output to `out`.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Usage(format!("write: {e}"));
    match cli.command {
        Command::Run { scenario } => {
            let sc = load_scenario(&scenario)?;
            let outcome = run_sweep(&sc)?;
            let ns: Vec<f64> = outcome.records.iter().map(|r| r.n as f64).collect();
            let td: Vec<f64> = outcome.records.iter().map(|r| r.trace_distance).collect();
            let fit = fit_loglog(&ns, &td).ok();
            let summary = serde_json::json!({
                "scenario": outcome.scenario,
                "records": outcome.records,
                "trace_distance_fit": fit,
                "violations": outcome.violations,
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&summary).unwrap()).map_err(io)?;
            if let Some(path) = &sc.output {
                let csv = to_csv(&outcome.records).map_err(usage)?;
                std::fs::write(sc.root.join(path), csv).map_err(io)?;
            }
            if !outcome.passed() {
                return Err(CliError::Failure(format!(
                    "scenario {}: {}",
                    outcome.scenario,
                    outcome.violations.join("; ")
                )));
            }
        }
        Command::Sweep { scenario, output } => {
            let sc = load_scenario(&scenario)?;
            let outcome = run_sweep(&sc)?;
            let csv = to_csv(&outcome.records).map_err(usage)?;
            match output.or_else(|| sc.output.as_ref().map(|p| sc.root.join(p))) {
                Some(p) if p.as_os_str() != "-" => std::fs::write(p, csv).map_err(io)?,
                _ => out.write_all(csv.as_bytes()).map_err(io)?,
            }
            if !outcome.passed() {
                for v in &outcome.violations {
                    eprintln!("scenario {}: {v}", outcome.scenario);
                }
                return Err(CliError::Failure(format!(
                    "{} inequality violations",
                    outcome.violations.len()
                )));
            }
        }
        Command::Check { seed, size, only, corrupt_projector } => {
            let report =
                check_suite(seed, size, &SuiteOptions { only, corrupt: corrupt_projector });
            out.write_all(report.text().as_bytes()).map_err(io)?;
            if !report.passed() {
                return Err(CliError::Failure(format!("{} cases failed", report.failures)));
            }
        }
        Command::Rate { csv, column } => {
            let (header, rows) = read_table(&read(&csv)?).map_err(usage)?;
            let n_col = sweep::column_of_table(&header, &rows, "N").map_err(usage)?;
            let values = sweep::column_of_table(&header, &rows, &column).map_err(usage)?;
            let fit = fit_loglog(&n_col, &values).map_err(usage)?;
            writeln!(
                out,
                "column={column} slope={:.6} intercept={:.6} residual={:.3e}",
                fit.slope, fit.intercept, fit.residual
            )
            .map_err(io)?;
        }
        Command::Plot { csv, column } => {
            let (header, _) = read_table(&read(&csv)?).map_err(usage)?;
            let script = gnuplot_script(&csv.display().to_string(), &header, &column).map_err(usage)?;
            out.write_all(script.as_bytes()).map_err(io)?;
        }
    }
    Ok(())
}

/// Parses `args`, runs, and returns the process exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
