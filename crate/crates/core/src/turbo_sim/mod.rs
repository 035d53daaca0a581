//! Ground-truth turbo-coded data: encoders, channel, puncturing and datasets.
//!
//! A systematic parallel turbo code emits the information block `X`, a
//! parity stream `Y = (P'/Q')·X` and a parity stream `Z = (P/Q)·X_Π` computed
//! on the interleaved block. Only `X` and `Z` matter for reconstruction, so
//! [`InterceptedDataset`] stores noisy soft values for those two streams.

mod channel;
mod dataset;
mod encoder;
mod permutation;
mod puncture;

use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use channel::{antipodal, channel_awgn, channel_awgn_with, hard_bit, hard_decide, tau_from_sigma};
pub use dataset::{generate_dataset, load_dataset, save_dataset, HardDecisions, InterceptedDataset, DATASET_MAGIC, DATASET_VERSION};
pub use encoder::{conv_encode, make_trellis, EncoderSpec, Trellis, MAX_MEMORY};
pub use permutation::Permutation;
pub use puncture::{puncture, PunctureMask};

use crate::gf2poly::PolyError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid encoder: {0}")]
    InvalidEncoder(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("noise standard deviation must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("invalid puncturing mask: {0}")]
    InvalidMask(String),
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("block length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("dataset version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("not a dataset file (bad magic)")]
    BadMagic,
    #[error("dataset truncated: need {needed} bytes, found {found}")]
    Truncated { needed: usize, found: usize },
    #[error("non-finite soft value at {stream}[{index}]")]
    NonFinite { stream: &'static str, index: usize },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Full description of a parallel turbo code.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurboSpec {
    pub perm: Permutation,
    /// First constituent encoder `P'/Q'` (output `Y`).
    pub first: EncoderSpec,
    /// Second constituent encoder `P/Q` (output `Z`).
    pub second: EncoderSpec,
    pub puncture_y: Option<PunctureMask>,
    pub puncture_z: Option<PunctureMask>,
}

impl TurboSpec {
    pub fn new(perm: Permutation, first: EncoderSpec, second: EncoderSpec) -> Result<Self, SimError> {
        if perm.is_empty() {
            return Err(SimError::InvalidPermutation("block length must be at least 1".into()));
        }
        Ok(Self { perm, first, second, puncture_y: None, puncture_z: None })
    }

    pub fn with_puncture_z(mut self, mask: PunctureMask) -> Self {
        self.puncture_z = Some(mask);
        self
    }

    pub fn block_len(&self) -> usize {
        self.perm.len()
    }
}

/// One encoded block `(X, Y, Z)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TurboCodeword {
    pub x: Vec<u8>,
    pub y: Vec<u8>,
    pub z: Vec<u8>,
}

/// `X = u`, `Y = (P'/Q')·u`, `Z = (P/Q)·(i -> u[Π(i)])`, all from the zero state.
pub fn turbo_encode(u: &[u8], spec: &TurboSpec) -> Result<TurboCodeword, SimError> {
    if u.len() != spec.block_len() {
        return Err(SimError::LengthMismatch { expected: spec.block_len(), actual: u.len() });
    }
    Ok(TurboCodeword {
        x: u.to_vec(),
        y: conv_encode(u, &spec.first),
        z: conv_encode(&spec.perm.apply(u), &spec.second),
    })
}
