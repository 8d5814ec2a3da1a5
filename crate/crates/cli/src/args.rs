//! Command-line grammar. Every setting is optional here; defaults are
//! applied after merging with the config file.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::FloatList;
use crate::options::{
    BaseChoice, BatchModeArg, EstimatorArg, NormalizerArg, PathArg, TruncationArg,
};

#[derive(Debug, Parser)]
#[command(
    name = "fourier-debias",
    version,
    about = "Bias-reduced estimation of smooth functionals in the Gaussian shift model"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bias/variance/MSE sweep over d = n^alpha; writes sweep.csv.
    Simulate(SimulateArgs),
    /// Plug-in, debiased and adaptive estimates at one observation.
    Estimate(EstimateArgs),
    /// Monte Carlo Bayes-risk ratio over the hypercube prior.
    LowerBound(LowerBoundArgs),
    /// KS distance of standardized errors from N(0, 1).
    NormalCheck(NormalCheckArgs),
}

#[derive(Debug, Clone, Args)]
pub struct IoArgs {
    /// Output directory for CSV, SVG and run.json.
    #[arg(long)]
    pub out: Option<PathArg>,
    /// Flat `key = value` file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Sample size; noise variance is 1/n.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub cutoff_k: Option<usize>,
    #[arg(long)]
    pub grid_m: Option<usize>,
    /// h1, h2, cos, sin, identity or grid:<path>.
    #[arg(long)]
    pub base: Option<BaseChoice>,
    /// Comma-separated alpha values (default 0.40,0.45,...,0.85).
    #[arg(long)]
    pub alphas: Option<FloatList>,
    /// Also run the adaptive estimator.
    #[arg(long)]
    pub adaptive: bool,
    /// Write adaptive_diff.csv with paired differences g - g_hat.
    #[arg(long)]
    pub adaptive_diff: bool,
    /// One theta per alpha row instead of a fresh draw per trial.
    #[arg(long)]
    pub fixed_theta: bool,
    /// Write bias.svg, variance.svg and mse.svg.
    #[arg(long)]
    pub plot: bool,
    /// Skip plots even when plotting is enabled.
    #[arg(long)]
    pub data_only: bool,
    /// full (n genuine observations) or sufficient (exact law of the summaries).
    #[arg(long)]
    pub batch_mode: Option<BatchModeArg>,
    /// Nominal smoothness for the reference lines.
    #[arg(long)]
    pub smoothness: Option<f64>,
    /// pinned:<c> or mean.
    #[arg(long)]
    pub normalizer: Option<NormalizerArg>,
    /// Box `low,high` for the coordinates of theta.
    #[arg(long)]
    pub theta_box: Option<FloatList>,
    /// Largest admissible multiplier exponent.
    #[arg(long)]
    pub guard: Option<f64>,
    #[command(flatten)]
    pub io: IoArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub base: Option<BaseChoice>,
    /// Observation, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<FloatList>,
    /// File holding the observation (commas or whitespace).
    #[arg(long)]
    pub x_file: Option<PathArg>,
    /// Per-coordinate noise standard deviation (default n^{-1/2}).
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// True parameter; enables the sensitivity sigma_f diagnostic.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<FloatList>,
    #[arg(long)]
    pub cutoff_k: Option<usize>,
    #[arg(long)]
    pub grid_m: Option<usize>,
    /// hard or dyadic.
    #[arg(long)]
    pub truncation: Option<TruncationArg>,
    #[arg(long)]
    pub guard: Option<f64>,
    /// Adaptive estimate from the batch given by --batch.
    #[arg(long)]
    pub adaptive: bool,
    /// Observation batch, one observation per line.
    #[arg(long)]
    pub batch: Option<PathArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub io: IoArgs,
}

#[derive(Debug, Clone, Args)]
pub struct LowerBoundArgs {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub smoothness: Option<f64>,
    #[command(flatten)]
    pub io: IoArgs,
}

#[derive(Debug, Clone, Args)]
pub struct NormalCheckArgs {
    #[arg(long)]
    pub base: Option<BaseChoice>,
    /// True parameter, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<FloatList>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub cutoff_k: Option<usize>,
    #[arg(long)]
    pub grid_m: Option<usize>,
    /// tf or plugin.
    #[arg(long)]
    pub estimator: Option<EstimatorArg>,
    /// Pass when the KS distance is at most this value.
    #[arg(long)]
    pub ks_threshold: Option<f64>,
    #[arg(long)]
    pub guard: Option<f64>,
    #[command(flatten)]
    pub io: IoArgs,
}
