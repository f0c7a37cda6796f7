mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use binscreen::{LinkKind, Method};
use clap::{Args, Parser, Subcommand};

/// Variable screening for binary-response regression.
#[derive(Parser, Debug)]
#[command(name = "binscreen", version, about)]
struct Cli {
    /// Write the run manifest to this file as well as to stderr.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a dataset from a model spec.
    Gen(GenArgs),
    /// Rank predictors and select the top d.
    Screen(ScreenArgs),
    /// Fit a binary regression, optionally on a screening report's selection.
    Fit(FitArgs),
    /// Population limits of the screening statistics for a model spec.
    Asymptotics(AsymptoticsArgs),
    /// Bias of the rescaled least-squares estimates.
    Table1(ExperimentArgs),
    /// Rates of selecting every active predictor.
    Table2(ExperimentArgs),
    /// Averaged screening statistics next to their population limits.
    Figure1(ExperimentArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Model spec JSON: {"gamma0", "gamma", "link", "cov": {"kind", "rho" | "matrix"}}.
    #[arg(long)]
    model: PathBuf,
    /// Number of rows to simulate.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScreenArgs {
    /// less, sisl or sisp.
    #[arg(long)]
    method: Method,
    /// CSV with a header row; every column except the response is a predictor.
    #[arg(long)]
    input: PathBuf,
    /// Name of the 0/1 response column.
    #[arg(long, default_value = "y")]
    response: String,
    /// Number of predictors to keep (default: floor(n / ln n)).
    #[arg(long)]
    d: Option<usize>,
    /// Scale every predictor to unit variance before scoring.
    #[arg(long)]
    standardize: bool,
    /// Report JSON (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "y")]
    response: String,
    /// logit or probit.
    #[arg(long, default_value = "logit")]
    link: LinkKind,
    /// Screening report whose selected predictors form the design.
    #[arg(long)]
    select: Option<PathBuf>,
    /// Hold out this fraction of rows and report their misclassification rate too.
    #[arg(long)]
    holdout: Option<f64>,
    /// Seed of the holdout split.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Fit JSON (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AsymptoticsArgs {
    #[arg(long)]
    model: PathBuf,
    /// Working link of the likelihood limit.
    #[arg(long, default_value = "logit")]
    working: LinkKind,
    /// Comma-separated 0-based predictor indices of the working model (default: all).
    #[arg(long, value_delimiter = ',')]
    subset: Option<Vec<usize>>,
    /// Emit the per-predictor curves as CSV instead of the full JSON.
    #[arg(long)]
    csv: bool,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Use the full replicate count (100) instead of the desk profile (50).
    #[arg(long)]
    paper_scale: bool,
    /// Override the replicate count.
    #[arg(long)]
    replicates: Option<usize>,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Number of predictors.
    #[arg(long)]
    p: Option<usize>,
    /// Correlation parameter of the AR1 and CS designs.
    #[arg(long)]
    rho: Option<f64>,
    /// Table CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON sidecar with per-replicate detail.
    #[arg(long)]
    json: Option<PathBuf>,
}

fn configure_threads() -> Result<(), commands::CliError> {
    if let Ok(value) = std::env::var("BINSCREEN_THREADS") {
        let threads: usize = value
            .parse()
            .ok()
            .filter(|&t| t > 0)
            .ok_or_else(|| commands::CliError::User(format!("BINSCREEN_THREADS must be a positive integer, got {value:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| commands::CliError::Internal(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = configure_threads().and_then(|()| commands::run(cli.command, cli.manifest.as_deref()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
