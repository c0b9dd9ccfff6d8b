//! `mpspec` command-line front end.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "mpspec", version, about = "Marchenko-Pastur law, smoothed spectral estimators and CLT checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate the limiting density and distribution function.
    Mp(MpArgs),
    /// Kernel-smoothed density and distribution function of a spectrum.
    Estimate(EstimateArgs),
    /// Smoothed sample quantiles next to the limiting quantiles.
    Quantile(QuantileArgs),
    /// Variance constant of the density statistic.
    Sigma2(Sigma2Args),
    /// Monte Carlo verification run from a JSON config.
    Verify(VerifyArgs),
    /// Direct versus contour-integral evaluation of the density statistic.
    Contour(ContourArgs),
    /// Bias rate of the averaged Stieltjes transform.
    Bias(BiasArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Regime {
    Cdf,
    Density,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Dist {
    Gaussian,
    ThreePoint,
}

#[derive(Args, Debug)]
pub struct OutputArgs {
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON sidecar path; defaults to the output path with a `.json` extension.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MpArgs {
    #[arg(long)]
    pub c: f64,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    /// Grid start; defaults to the lower edge.
    #[arg(long)]
    pub from: Option<f64>,
    /// Grid end; defaults to the upper edge.
    #[arg(long)]
    pub to: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Where the spectrum comes from: an eigenvalue CSV or a fresh simulation.
#[derive(Args, Debug)]
pub struct SourceArgs {
    /// Eigenvalue CSV (header `eigenvalue`); needs `--n`.
    #[arg(long = "in", conflicts_with = "simulate")]
    pub input: Option<PathBuf>,
    /// Simulate a spectrum; optional `p=.. n=.. seed=..` overrides.
    #[arg(long, num_args = 0.., value_name = "KEY=VALUE")]
    pub simulate: Option<Vec<String>>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Dist::Gaussian)]
    pub dist: Dist,
    /// Also write the spectrum as eigenvalue CSV.
    #[arg(long)]
    pub export: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Bandwidth; the `--regime` rule is used when omitted.
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long, value_enum, default_value_t = Regime::Density)]
    pub regime: Regime,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    #[arg(long)]
    pub from: Option<f64>,
    #[arg(long)]
    pub to: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct QuantileArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub alpha: Vec<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long, value_enum, default_value_t = Regime::Cdf)]
    pub regime: Regime,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct Sigma2Args {
    #[arg(long, default_value = "gaussian")]
    pub kernel: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the configured replication count.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Overrides the configured master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ContourArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Evaluation points.
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    pub at: Vec<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long, value_enum, default_value_t = Regime::Density)]
    pub regime: Regime,
    /// Left side of the rectangle; defaults to half the lower edge.
    #[arg(long)]
    pub a_l: Option<f64>,
    /// Right side of the rectangle; defaults to the upper edge plus one.
    #[arg(long)]
    pub a_r: Option<f64>,
    /// Half-height in units of the bandwidth.
    #[arg(long)]
    pub v0: Option<f64>,
    #[arg(long)]
    pub per_side: Option<usize>,
    /// Largest relative residual that still passes.
    #[arg(long, default_value_t = 1e-3)]
    pub tolerance: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BiasArgs {
    #[arg(long, default_value_t = 0.5)]
    pub c: f64,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 50)]
    pub reps: usize,
    /// Number of grid points across the bulk.
    #[arg(long, default_value_t = 10)]
    pub points: usize,
    /// Height of the grid above the real axis.
    #[arg(long, default_value_t = 0.1)]
    pub v: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = commands::configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Mp(a) => commands::mp(a),
        Command::Estimate(a) => commands::estimate(a),
        Command::Quantile(a) => commands::quantile(a),
        Command::Sigma2(a) => commands::sigma2(a),
        Command::Verify(a) => commands::verify(a),
        Command::Contour(a) => commands::contour(a),
        Command::Bias(a) => commands::bias(a),
    };
    match result {
        Ok(commands::Outcome::Pass) => ExitCode::SUCCESS,
        Ok(commands::Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
