use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use turbo_recon::turbo_sim::{EncoderSpec, PunctureMask};

#[derive(Parser, Debug)]
#[command(name = "turbo-recon", version, about = "Recover the encoder and interleaver of a turbo code from intercepted noisy blocks")]
pub struct Cli {
    /// Master seed; overrides the one in the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Experiment config (JSON); flags given on the command line take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate an intercepted dataset from a random turbo code.
    Simulate(SimulateArgs),
    /// Build the classification table and optionally identify an encoder from found checks.
    Classify(ClassifyArgs),
    /// Search a dataset for low-weight parity checks.
    DualwordSearch(SearchArgs),
    /// Entropy histograms and the block count needed for the entropy method.
    EntropyPlan(PlanArgs),
    /// Reconstruct the interleaver with the entropy method for a known encoder.
    EntropyReconstruct(ReconstructArgs),
    /// Full attack: parity checks, then entropy reconstruction.
    Auto(AutoArgs),
    /// Run a set of experiments and print one CSV row each.
    Suite(SuiteArgs),
    /// Expected number of positions left uncovered by the parity-check search.
    Predict(PredictArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct DataArgs {
    /// Dataset file written by `simulate`.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Reference permutation to score the result against.
    #[arg(long)]
    pub planted: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub blocks: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Second encoder `P/Q`, e.g. `1+D^2/1+D+D^2`.
    #[arg(long)]
    pub encoder: Option<EncoderSpec>,
    #[arg(long)]
    pub first_encoder: Option<EncoderSpec>,
    /// Z puncturing pattern, e.g. `10`.
    #[arg(long)]
    pub puncture_z: Option<PunctureMask>,
    #[arg(long)]
    pub out: PathBuf,
    /// Where to write the planted permutation.
    #[arg(long)]
    pub perm_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[arg(long, default_value_t = 3)]
    pub max_degree: usize,
    #[arg(long, default_value_t = 6)]
    pub weight: usize,
    #[arg(long, default_value_t = 32)]
    pub lambda_degree: usize,
    /// Also admit reducible feedback polynomials.
    #[arg(long)]
    pub reducible: bool,
    /// Write the table as text.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Checks (JSON, from `dualword-search`) to identify the encoder from.
    #[arg(long)]
    pub checks: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub weight: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    #[arg(long)]
    pub ell: Option<usize>,
    #[arg(long)]
    pub span: Option<usize>,
    /// Resolve permutation positions under this encoder.
    #[arg(long)]
    pub encoder: Option<EncoderSpec>,
    /// Write the checks as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PlanArgs {
    #[arg(long)]
    pub encoder: EncoderSpec,
    #[arg(long)]
    pub sigma: f64,
    /// Block length; sets the default error rates `1/N` and `0.01/N`.
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub w_bins: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Write the stationary histograms as CSV.
    #[arg(long)]
    pub histogram_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub encoder: EncoderSpec,
    #[arg(long)]
    pub beam: Option<usize>,
    #[arg(long)]
    pub max_candidates: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Write the recovered permutation.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AutoArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Generate a dataset instead: block length.
    #[arg(long, requires_all = ["blocks", "sigma"])]
    pub n: Option<usize>,
    #[arg(long)]
    pub blocks: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Encoder planted when generating (default `1+D^2/1+D+D^2`).
    #[arg(long)]
    pub encoder: Option<EncoderSpec>,
    #[arg(long)]
    pub max_degree: Option<usize>,
    #[arg(long)]
    pub skip_dualword: bool,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SuiteArgs {
    /// JSON array of experiment configs.
    #[arg(long, conflicts_with = "table")]
    pub configs: Option<PathBuf>,
    /// Reproduce the published experiment table.
    #[arg(long)]
    pub table: bool,
    /// Include the long-running rows of the table.
    #[arg(long, requires = "table")]
    pub long: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub n: usize,
    /// Crossover probability of the hard decisions.
    #[arg(long, conflicts_with = "sigma")]
    pub tau: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 6)]
    pub weight: usize,
    /// Sum of w0 over the dualwords; computed from `--encoder` when absent.
    #[arg(long, conflicts_with = "encoder")]
    pub w_total: Option<usize>,
    #[arg(long)]
    pub encoder: Option<EncoderSpec>,
    #[arg(long, default_value_t = 3)]
    pub runs: usize,
    #[arg(long)]
    pub ell: Option<usize>,
}
