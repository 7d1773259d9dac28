//! `lppl`: fit, scan and synthesize log-periodic power law price series.
//!
//! Exit codes: 0 success, 2 usage error, 3 input or data error, 4 numerical
//! failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Input(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<lppl::Error> for CliError {
    fn from(e: lppl::Error) -> Self {
        use lppl::{Error, ErrorKind};
        match (&e, e.kind()) {
            (Error::InvalidConfig(_) | Error::InvalidRange { .. }, _) => {
                CliError::Usage(e.to_string())
            }
            (_, ErrorKind::Numerical) => CliError::Numerical(e.to_string()),
            (_, ErrorKind::Input | ErrorKind::Io) => CliError::Input(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "lppl",
    version,
    about = "LPPL bubble fits and crash-window scans"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one window and print a report.
    Fit(FitArgs),
    /// Fit windows with stepped start dates and a fixed end date.
    Scan(ScanArgs),
    /// Write a synthetic LPPL price series as CSV.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Price CSV with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// Name of the date column [default: date].
    #[arg(long)]
    pub date_col: Option<String>,
    /// Name of the price column [default: close].
    #[arg(long)]
    pub price_col: Option<String>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flat TOML config file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Window start [default: first observation].
    #[arg(long)]
    pub start: Option<NaiveDate>,
    /// Window end [default: last observation].
    #[arg(long)]
    pub end: Option<NaiveDate>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Days between consecutive window starts [default: 15].
    #[arg(long)]
    pub step_days: Option<u32>,
    /// Number of windows [default: 10].
    #[arg(long)]
    pub windows: Option<usize>,
    /// Lower crash-window quantile [default: 0.20].
    #[arg(long)]
    pub q_lo: Option<f64>,
    /// Upper crash-window quantile [default: 0.80].
    #[arg(long)]
    pub q_hi: Option<f64>,
    /// Days to extrapolate each fit past the window end [default: 100].
    #[arg(long)]
    pub extrapolate_days: Option<u32>,
    /// Write plot CSVs and annotations.json into this directory.
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value = "2008-10-15")]
    pub start: NaiveDate,
    #[arg(long, default_value = "2009-07-09")]
    pub end: NaiveDate,
    /// Critical time in days after the end date.
    #[arg(long, default_value_t = 30.0, allow_negative_numbers = true)]
    pub tc_days_after_end: f64,
    #[arg(long, default_value_t = 0.5)]
    pub m: f64,
    #[arg(long, default_value_t = 9.0)]
    pub omega: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub phi: f64,
    #[arg(long, default_value_t = 8.2, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub b: f64,
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub c: f64,
    /// Standard deviation of Gaussian log-price noise.
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Only emit Monday to Friday.
    #[arg(long)]
    pub weekdays: bool,
    #[arg(long, default_value = "date")]
    pub date_col: String,
    #[arg(long, default_value = "close")]
    pub price_col: String,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fit(args) => commands::fit(args),
        Command::Scan(args) => commands::scan(args),
        Command::Synth(args) => commands::synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
