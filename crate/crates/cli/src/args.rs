use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use owen_gauss::verify::Suite;

#[derive(Debug, Parser)]
#[command(
    name = "owen-gauss",
    version,
    about = "Gaussian-CDF-product identities, probit-Bernoulli pmf, and their oracles"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scalar latent variable: ∫ ∏ Φ((x − m_r)/v_r) N(x | μ, σ²) dx.
    Lemma2(Lemma2Args),
    /// Vector latent variable: ∫ ∏ Φ((x_r − m_r)/v_r) N(x | μ, Σ) dx.
    Lemma3(Lemma3Args),
    /// Probability of one sign vector.
    Pmf(PmfArgs),
    /// Seeded draws, one sign vector per line.
    Sample(SampleArgs),
    /// Sum of the pmf over every sign vector (N ≤ 15).
    Normalize(NormalizeArgs),
    /// Run the property suites and print a pass/fail table.
    Verify(VerifyArgs),
    /// Closed form against oracle for a list of parameter records.
    Table(TableArgs),
    /// Bivariate normal density on a grid, with the negative-orthant region.
    Figure(FigureArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Seed for every randomized step.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Emit a single JSON object instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct Lemma2Args {
    #[arg(long, allow_hyphen_values = true)]
    pub mu: f64,
    #[arg(long)]
    pub sigma2: f64,
    #[arg(long, value_parser = parse_reals, allow_hyphen_values = true)]
    pub m: Reals,
    #[arg(long, value_parser = parse_reals, allow_hyphen_values = true)]
    pub v: Reals,
    #[arg(long, default_value_t = 1e-6)]
    pub accuracy: f64,
    /// Also evaluate the left-hand side by Gauss–Hermite quadrature.
    #[arg(long)]
    pub oracle: bool,
    /// Gauss–Hermite order for the oracle.
    #[arg(long, default_value_t = 200)]
    pub order: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Lemma3Args {
    #[arg(long, value_parser = parse_reals, allow_hyphen_values = true)]
    pub mu: Reals,
    #[arg(long, value_parser = parse_reals, allow_hyphen_values = true)]
    pub m: Reals,
    #[arg(long, value_parser = parse_reals, allow_hyphen_values = true)]
    pub v: Reals,
    /// JSON matrix file {"dim": N, "entries": [[...], ...]}.
    #[arg(long)]
    pub cov: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    pub accuracy: f64,
    /// Also estimate the left-hand side by Monte Carlo.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long, value_parser = parse_count, default_value = "1e6")]
    pub draws: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_parser = parse_reals, allow_hyphen_values = true)]
    pub mu: Reals,
    /// JSON matrix file {"dim": N, "entries": [[...], ...]}.
    #[arg(long)]
    pub cov: PathBuf,
}

#[derive(Debug, Args)]
pub struct PmfArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated ±1 entries.
    #[arg(long, allow_hyphen_values = true)]
    pub y: String,
    #[arg(long, default_value_t = 1e-6)]
    pub accuracy: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of draws (integer, scientific notation accepted).
    #[arg(long, value_parser = parse_count)]
    pub n: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct NormalizeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Per-term accuracy.
    #[arg(long, default_value_t = 1e-6)]
    pub accuracy: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_parser = parse_suite)]
    pub suite: Suite,
    #[arg(long, value_parser = parse_count, default_value = "100")]
    pub trials: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub accuracy: f64,
    /// Added to every measured deviation; for exercising the failure path.
    #[arg(long, default_value_t = 0.0, hide = true)]
    pub perturb: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// JSON array of parameter records.
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, default_value_t = 1e-6)]
    pub accuracy: f64,
    /// Monte Carlo draws for vector-latent records.
    #[arg(long, value_parser = parse_count, default_value = "1e6")]
    pub draws: usize,
    /// Gauss–Hermite order for scalar-latent records.
    #[arg(long, default_value_t = 200)]
    pub order: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub rho: f64,
    /// Points per axis.
    #[arg(long, default_value_t = 201)]
    pub grid: usize,
    /// Half-width of the square window.
    #[arg(long, default_value_t = 3.5)]
    pub extent: f64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reals(pub Vec<f64>);

fn parse_reals(s: &str) -> Result<Reals, String> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>().map_err(|_| format!("{t:?} is not a number"))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Reals)
}

/// Non-negative integer, also written as e.g. `1e6`.
fn parse_count(s: &str) -> Result<usize, String> {
    if let Ok(n) = s.parse::<usize>() {
        return Ok(n);
    }
    let x: f64 = s.parse().map_err(|_| format!("{s:?} is not a count"))?;
    if x >= 0.0 && x.fract() == 0.0 && x <= usize::MAX as f64 {
        Ok(x as usize)
    } else {
        Err(format!("{s:?} is not a non-negative integer"))
    }
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: owen_gauss::Error| e.to_string())
}
