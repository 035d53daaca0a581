use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::bcjr_entropy::{TargetParams, DEFAULT_W_BINS};
use crate::dualword_recon::SearchParams;
use crate::seed;
use crate::turbo_sim::{generate_dataset, load_dataset, EncoderSpec, InterceptedDataset, Permutation, PunctureMask, TurboSpec};

/// Simulated interception.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationSpec {
    pub n: usize,
    pub blocks: usize,
    pub sigma: f64,
    /// Second (interleaved) encoder; also used for the first unless overridden.
    pub encoder: EncoderSpec,
    #[serde(default)]
    pub first_encoder: Option<EncoderSpec>,
    /// Z puncturing pattern such as `"10"`.
    #[serde(default)]
    pub puncture_z: Option<PunctureMask>,
}

impl GenerationSpec {
    pub fn new(n: usize, blocks: usize, sigma: f64, encoder: EncoderSpec) -> Self {
        Self { n, blocks, sigma, encoder, first_encoder: None, puncture_z: None }
    }

    /// Planted code and intercepted blocks, both derived from `seed`.
    pub fn build(&self, seed: u64) -> Result<(TurboSpec, InterceptedDataset), PipelineError> {
        let perm = Permutation::random(self.n, &mut seed::rng(seed::derive(seed, seed::label::PERMUTATION)));
        let first = self.first_encoder.clone().unwrap_or_else(|| self.encoder.clone());
        let mut spec = TurboSpec::new(perm, first, self.encoder.clone())?;
        if let Some(mask) = &self.puncture_z {
            spec = spec.with_puncture_z(mask.clone());
        }
        let ds = generate_dataset(&spec, self.blocks, self.sigma, seed)?;
        Ok((spec, ds))
    }
}

/// Parity-check search settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Method1Config {
    pub weight: usize,
    pub ell: Option<usize>,
    pub span: usize,
    /// Upper bound on search runs, the first included.
    pub max_runs: usize,
    /// Fewer verified checks than this after the first run skips to the entropy phase.
    pub min_checks: usize,
    /// Stop repeating runs once one shrinks `N'` by less than this fraction.
    pub min_decrease: f64,
    pub classification_weight: usize,
    pub max_lambda_degree: usize,
}

impl Default for Method1Config {
    fn default() -> Self {
        Self { weight: 6, ell: None, span: 8, max_runs: 8, min_checks: 3, min_decrease: 0.1, classification_weight: 6, max_lambda_degree: 32 }
    }
}

impl Method1Config {
    pub fn search_params(&self, seed: u64) -> SearchParams {
        let mut p = SearchParams::new(self.weight);
        p.ell = self.ell;
        p.span = self.span;
        p.seed = seed;
        p
    }
}

/// Entropy reconstruction settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Method2Config {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub w_bins: usize,
    pub samples: usize,
    pub burn_in: Option<usize>,
    pub beam: Option<usize>,
    pub max_candidates: usize,
}

impl Default for Method2Config {
    fn default() -> Self {
        Self { alpha: None, beta: None, w_bins: DEFAULT_W_BINS, samples: 20_000, burn_in: None, beam: None, max_candidates: 1024 }
    }
}

impl Method2Config {
    pub fn target_params(&self, seed: u64) -> TargetParams {
        TargetParams { w_bins: self.w_bins, samples: self.samples, burn_in: self.burn_in, seed, ..TargetParams::default() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputPaths {
    pub report: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub dataset: Option<PathBuf>,
    #[serde(default)]
    pub generate: Option<GenerationSpec>,
    /// Reference permutation for scoring a dataset loaded from disk.
    #[serde(default)]
    pub planted: Option<PathBuf>,
    #[serde(default = "default_min_degree")]
    pub min_degree: usize,
    #[serde(default = "default_max_degree")]
    pub max_degree: usize,
    /// Encoders to try instead of the whole degree range.
    #[serde(default)]
    pub encoders: Option<Vec<EncoderSpec>>,
    /// Go straight to entropy reconstruction.
    #[serde(default)]
    pub skip_dualword: bool,
    #[serde(default)]
    pub method1: Method1Config,
    #[serde(default)]
    pub method2: Method2Config,
    #[serde(default)]
    pub output: OutputPaths,
    #[serde(default)]
    pub seed: u64,
    /// Free-form row label for suites.
    #[serde(default)]
    pub label: Option<String>,
}

fn default_min_degree() -> usize {
    1
}

fn default_max_degree() -> usize {
    3
}

impl ExperimentConfig {
    fn base(seed: u64) -> Self {
        Self {
            dataset: None,
            generate: None,
            planted: None,
            min_degree: default_min_degree(),
            max_degree: default_max_degree(),
            encoders: None,
            skip_dualword: false,
            method1: Method1Config::default(),
            method2: Method2Config::default(),
            output: OutputPaths::default(),
            seed,
            label: None,
        }
    }

    pub fn generated(spec: GenerationSpec, seed: u64) -> Self {
        Self { generate: Some(spec), ..Self::base(seed) }
    }

    pub fn from_dataset(path: PathBuf, seed: u64) -> Self {
        Self { dataset: Some(path), ..Self::base(seed) }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        match (&self.dataset, &self.generate) {
            (Some(_), Some(_)) | (None, None) => {
                return Err(PipelineError::Config("exactly one of `dataset` and `generate` must be given".into()));
            }
            (Some(p), None) if !p.exists() => return Err(PipelineError::Config(format!("dataset {} does not exist", p.display()))),
            (None, Some(g)) if g.n == 0 || g.blocks == 0 => return Err(PipelineError::Config("generation needs n, blocks >= 1".into())),
            _ => {}
        }
        if let Some(p) = &self.planted {
            if !p.exists() {
                return Err(PipelineError::Config(format!("planted permutation {} does not exist", p.display())));
            }
        }
        if self.min_degree == 0 || self.min_degree > self.max_degree {
            return Err(PipelineError::Config(format!("bad degree range {}..={}", self.min_degree, self.max_degree)));
        }
        if self.method1.max_runs == 0 {
            return Err(PipelineError::Config("method1.max_runs must be at least 1".into()));
        }
        Ok(())
    }

    /// Dataset and, when known, the planted permutation.
    pub fn materialize(&self) -> Result<(InterceptedDataset, Option<Permutation>), PipelineError> {
        self.validate()?;
        if let Some(g) = &self.generate {
            let (spec, ds) = g.build(self.seed)?;
            return Ok((ds, Some(spec.perm)));
        }
        let ds = load_dataset(self.dataset.as_ref().expect("validated"))?;
        let planted = self.planted.as_ref().map(|p| Permutation::load(p)).transpose()?;
        Ok((ds, planted))
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// Rows of the published experiment table: `(N, sigma, M, long_running)`.
pub const TABLE_ROWS: [(usize, f64, usize, bool); 10] = [
    (64, 0.43, 50, false),
    (64, 0.6, 115, false),
    (64, 1.0, 1380, false),
    (512, 0.6, 170, false),
    (512, 0.8, 600, false),
    (512, 1.0, 2800, false),
    (512, 1.1, 3840, false),
    (512, 1.3, 29500, true),
    (10000, 0.43, 300, true),
    (10000, 0.6, 250, true),
];

/// Entropy-only configurations reproducing the experiment table.
pub fn table_configs(include_long: bool, seed: u64) -> Vec<ExperimentConfig> {
    let enc: EncoderSpec = "1+D^2/1+D+D^2".parse().expect("literal");
    TABLE_ROWS
        .iter()
        .filter(|r| include_long || !r.3)
        .enumerate()
        .map(|(i, &(n, sigma, m, _))| {
            let mut c = ExperimentConfig::generated(GenerationSpec::new(n, m, sigma, enc.clone()), seed::derive(seed, i as u64));
            c.skip_dualword = true;
            c.encoders = Some(vec![enc.clone()]);
            c.label = Some(format!("N={n} sigma={sigma} M={m}"));
            c
        })
        .collect()
}
