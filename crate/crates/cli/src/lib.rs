//! Command-line driver: configuration ingestion, experiment scans, report
//! persistence and the verification suite.

pub mod config;
pub mod report;
pub mod scans;
pub mod verify;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::config::{Experiment, ScanConfig};
use crate::report::Report;

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "MODLAB_WORKERS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_TOLERANCE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Parser)]
#[command(name = "modlab", version, about = "Cubic NLS laboratory: scans, reports and the invariant suite")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON config (schema_version 1).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; MODLAB_WORKERS overrides the config value.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory for `<experiment>.csv` and `<experiment>.json`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Modulation norms of the configured data.
    Norm,
    /// Split-step evolution with mass drift.
    Evolve,
    /// Picard iterates, parity and homogeneity.
    Picard,
    /// Perturbation-determinant quantities and their drift.
    Alpha,
    /// Track the `ũ + v` splitting and its energies.
    GwpTrack,
    /// Parameter scan: illposedness, dispersion, scaling or conservation.
    Scan {
        #[arg(long)]
        experiment: String,
    },
    /// The full invariant suite.
    Verify,
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(report) => {
            let failed = report.rows.iter().filter(|r| !r.passed).count();
            println!(
                "{}: {} rows, {} failed, config {}",
                report.experiment,
                report.rows.len(),
                failed,
                report.config_hash
            );
            if failed == 0 {
                EXIT_OK
            } else {
                EXIT_TOLERANCE
            }
        }
        Err(e) => {
            eprintln!("modlab: {e}");
            EXIT_USAGE
        }
    }
}

fn worker_count(flag: Option<usize>, config: Option<usize>) -> Result<Option<usize>, CliError> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{WORKERS_ENV}={v:?} is not a worker count")))?;
        return Ok(Some(n));
    }
    Ok(config)
}

fn execute(cli: Cli) -> Result<Report, CliError> {
    let experiment = match &cli.command {
        Command::Norm => Some(Experiment::Norm),
        Command::Evolve => Some(Experiment::Evolve),
        Command::Picard => Some(Experiment::Picard),
        Command::Alpha => Some(Experiment::Alpha),
        Command::GwpTrack => Some(Experiment::GwpTrack),
        Command::Scan { experiment } => {
            let e = Experiment::parse(experiment)
                .filter(|e| e.is_scan())
                .ok_or_else(|| CliError::Usage(format!("unknown scan experiment {experiment:?}")))?;
            Some(e)
        }
        Command::Verify => None,
    };
    let mut cfg = match (experiment, &cli.config) {
        (None, Some(_)) => return Err(CliError::Usage("verify takes no config file".into())),
        (None, None) => None,
        (Some(e), Some(path)) => Some(ScanConfig::from_json(&std::fs::read_to_string(path)?, Some(e))?),
        (Some(e), None) => Some(ScanConfig::defaults(e)),
    };
    if let Some(c) = cfg.as_mut() {
        if let Some(s) = cli.seed {
            c.seed = s;
        }
        if cli.out.is_some() {
            c.out = cli.out.clone();
        }
    }
    let workers = worker_count(cli.workers, cfg.as_ref().and_then(|c| c.workers))?;
    if workers == Some(0) {
        return Err(CliError::Usage("worker count must be positive".into()));
    }
    let out = cfg
        .as_ref()
        .and_then(|c| c.out.clone())
        .or(cli.out)
        .unwrap_or_else(|| PathBuf::from("modlab-out"));
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    let seed = cli.seed.unwrap_or(42);
    let report = pool.install(|| match &cfg {
        Some(c) => scans::run_scan(c),
        None => verify::run_verify(seed),
    });
    report.write(&out)?;
    Ok(report)
}
