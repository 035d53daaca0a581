//! Reconstruction from low-weight dualwords.
//!
//! For an encoder `P/Q`, every polynomial `λ` yields a dualword `(λP, λQ)`
//! and, at each time `t`, the parity check
//! `sum_{b in λQ} Z[t-b] + sum_{a in λP} X[Π(t-a)] = 0` on noiseless data.
//! Finding such checks in the intercepted matrix identifies `P/Q` through
//! the [classification table](ClassificationTable) and pins down the
//! interleaver on the positions the checks cover.

mod classification;
mod coverage;
mod dualword;
mod positions;
mod search;

use std::io;

use thiserror::Error;

pub use classification::{build_classification, identify_encoder, identify_tolerant, ClassKey, ClassificationTable, EncoderUniverse};
pub use coverage::{default_ell, detection_probability, p_true, predict_coverage, total_w0, Coverage};
pub use dualword::{enumerate_dualwords, Dualword};
pub use positions::{check_positions, recover_positions, PermutationConstraint};
pub use search::{chance_floor, find_parity_checks, search_run, ParityCheck, SearchParams, FALSE_ALARM_BUDGET};

#[derive(Debug, Error)]
pub enum DualwordError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("ell = {ell} exceeds the {blocks} available blocks")]
    EllTooLarge { ell: usize, blocks: usize },
    #[error("signature table needs {needed_bytes} bytes, budget is {budget} (collision memory grows as N^ceil(w/4) ~ {estimate:.3e})")]
    MemoryBudget { needed_bytes: u64, budget: u64, estimate: f64 },
    #[error("no encoder of the table admits key {key} together with the previous checks")]
    NoConsistentEncoder { key: String },
    #[error("checks contradict each other: {first:?} vs {second:?}")]
    Contradiction { first: Box<ParityCheck>, second: Box<ParityCheck> },
    #[error("malformed classification cache: {0}")]
    BadCache(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}
