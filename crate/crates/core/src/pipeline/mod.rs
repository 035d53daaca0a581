//! Combined attack, experiment configuration and reports.
//!
//! [`auto_reconstruct`] runs one parity-check search; if it finds enough
//! checks the encoder is identified and the search is repeated while each
//! run still shrinks the number `N'` of unknown positions noticeably. The
//! entropy reconstruction then completes `Π`, seeded with the positions the
//! checks fixed, and is tried over the whole degree range when no check was
//! found.
//!
//! Seeds: the dataset uses the master seed, the permutation
//! `derive(seed, PERMUTATION)`, search run `r` `derive(derive(seed, SEARCH), r)`
//! and target sampling `derive(seed, TARGETS)`; see [`crate::seed`].

mod auto;
mod config;
mod report;

use std::io;

use thiserror::Error;

use crate::bcjr_entropy::EntropyError;
use crate::dualword_recon::DualwordError;
use crate::turbo_sim::SimError;

pub use auto::{auto_reconstruct, partial_success_stats, reconstruct_dataset, run_experiment_suite, theory_blocks, trial_seed, SuccessStats, SuiteRow};
pub use config::{table_configs, ExperimentConfig, GenerationSpec, Method1Config, Method2Config, OutputPaths, TABLE_ROWS};
pub use report::{EncoderTrial, PhaseRecord, Provenance, ReconstructionReport, REPORT_VERSION};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Dualword(#[from] DualwordError),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}
