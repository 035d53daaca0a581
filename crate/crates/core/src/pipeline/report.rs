use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, PipelineError};
use crate::dualword_recon::ParityCheck;
use crate::turbo_sim::EncoderSpec;

pub const REPORT_VERSION: u32 = 1;

/// Where a recovered entry of `Π` came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Provenance {
    /// Index into [`ReconstructionReport::checks`].
    ParityCheck { check: usize },
    /// Step of the entropy reconstruction that fixed the entry.
    EntropyStep { step: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub phase: u8,
    pub name: String,
    /// Unresolved positions once the phase ends.
    pub n_prime: usize,
    pub wall_seconds: f64,
}

/// One encoder tried by the entropy phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderTrial {
    pub encoder: EncoderSpec,
    pub completed: bool,
    /// Step at which every candidate had been discarded.
    pub failed_at: Option<usize>,
    pub survivors: usize,
    pub max_candidates: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub version: u32,
    pub config: ExperimentConfig,
    pub block_len: usize,
    pub blocks: usize,
    pub sigma: f64,
    /// Encoders consistent with the parity checks (empty when none were used).
    pub identified: Vec<EncoderSpec>,
    /// Encoder under which `permutation` was reconstructed.
    pub encoder: Option<EncoderSpec>,
    /// `permutation[i] = Π(i)` where known.
    pub permutation: Vec<Option<usize>>,
    pub provenance: Vec<Option<Provenance>>,
    pub checks: Vec<ParityCheck>,
    /// `N'` after each search run.
    pub n_prime_history: Vec<usize>,
    pub phases: Vec<PhaseRecord>,
    /// Candidate count after each entropy step for the retained encoder.
    pub candidate_trace: Vec<usize>,
    pub encoder_trials: Vec<EncoderTrial>,
    pub success: bool,
    /// Fraction of positions matching the planted permutation, when known.
    pub proportion_recovered: Option<f64>,
    pub planted_match: Option<bool>,
    pub diagnostics: Vec<String>,
}

impl ReconstructionReport {
    pub fn resolved(&self) -> usize {
        self.permutation.iter().filter(|p| p.is_some()).count()
    }

    pub fn n_prime(&self) -> usize {
        self.block_len - self.resolved()
    }

    pub fn total_seconds(&self) -> f64 {
        self.phases.iter().map(|p| p.wall_seconds).sum()
    }

    /// Copy with every wall-clock field zeroed.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        r.phases.iter_mut().for_each(|p| p.wall_seconds = 0.0);
        r
    }

    /// Entries are injective and each carries a provenance.
    pub fn check_consistency(&self) -> Result<(), String> {
        let mut seen = vec![false; self.block_len];
        for (i, (p, src)) in self.permutation.iter().zip(&self.provenance).enumerate() {
            match (p, src) {
                (Some(j), Some(_)) => {
                    if *j >= self.block_len || std::mem::replace(&mut seen[*j], true) {
                        return Err(format!("column {j} assigned twice or out of range (position {i})"));
                    }
                }
                (None, None) => {}
                _ => return Err(format!("position {i} has a value without provenance or vice versa")),
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, PipelineError> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub const CSV_HEADER: &'static str =
        "label,seed,n,blocks,sigma,encoder,checks,n_prime_search,n_prime_final,resolved,success,proportion_recovered,seconds";

    pub fn csv_row(&self) -> String {
        let search = self.n_prime_history.last().copied().unwrap_or(self.block_len);
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{:.3}",
            self.config.label.clone().unwrap_or_default().replace(',', ";"),
            self.config.seed,
            self.block_len,
            self.blocks,
            self.sigma,
            self.encoder.as_ref().map(|e| e.to_string()).unwrap_or_default(),
            self.checks.len(),
            search,
            self.n_prime(),
            self.resolved(),
            self.success,
            self.proportion_recovered.map(|p| format!("{p:.6}")).unwrap_or_default(),
            self.total_seconds()
        )
    }

    /// Writes the JSON report and CSV row to the configured paths.
    pub fn write_outputs(&self) -> Result<(), PipelineError> {
        if let Some(p) = &self.config.output.report {
            self.save(p)?;
        }
        if let Some(p) = &self.config.output.csv {
            fs::write(p, format!("{}\n{}\n", Self::CSV_HEADER, self.csv_row()))?;
        }
        Ok(())
    }
}
