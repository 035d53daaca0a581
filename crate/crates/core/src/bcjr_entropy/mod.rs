//! Reconstruction from statistics of the forward recursion.
//!
//! Guessing `Π(i)` correctly keeps the forward probabilities of the second
//! encoder sharp; a wrong column feeds an unrelated systematic value and
//! flattens them. The entropy of the forward state, histogrammed over the
//! `M` intercepted blocks, is compared against sampled good and bad
//! distributions with a Neyman-Pearson test.

mod forward;
mod histogram;
mod reconstruct;
mod threshold;

use thiserror::Error;

use crate::turbo_sim::SimError;

pub use forward::{entropy, forward_step, Channel, ForwardState};
pub use histogram::{
    histogram_csv, log_ratios, np_stats, sample_target_distributions, sample_targets, EntropyHistogram, NPStats, TargetParams, TargetSet,
    DEFAULT_W_BINS, PSEUDO_COUNT,
};
pub use reconstruct::{reconstruct_permutation, ReconstructOptions, ReconstructionOutcome, Schedule, StepTest, Survivor};
pub use threshold::{solve_threshold, Distinguisher, LogMgf, OperatingPoint, ThresholdSolution, MAX_BLOCKS};

#[derive(Debug, Error)]
pub enum EntropyError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("forward probabilities vanished")]
    Degenerate,
    #[error("{0} has no entropy distinguisher (P and Q need a constant term)")]
    NoDistinguisher(String),
    #[error("good and bad distributions coincide; no finite M separates them")]
    IdenticalDistributions,
    #[error("targets unreachable within {blocks} blocks (best alpha {alpha:.3e}, beta {beta:.3e})")]
    Unattainable { blocks: usize, alpha: f64, beta: f64 },
    #[error("histograms have {left} and {right} bins")]
    BinMismatch { left: usize, right: usize },
    #[error("numerical failure: {0}")]
    Numerical(&'static str),
    #[error(transparent)]
    Sim(#[from] SimError),
}
