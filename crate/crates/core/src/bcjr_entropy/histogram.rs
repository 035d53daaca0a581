use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::forward::{entropy_of, Channel, Kernel};
use super::EntropyError;
use crate::seed;
use crate::turbo_sim::{antipodal, make_trellis, EncoderSpec};

/// Pseudo-count added to every bin of a target histogram.
pub const PSEUDO_COUNT: f64 = 0.5;
pub const DEFAULT_W_BINS: usize = 32;

/// Distribution of quantized entropies over `w_bins` equal bins of `[0, m]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyHistogram {
    memory: usize,
    counts: Vec<u64>,
    masses: Vec<f64>,
}

impl EntropyHistogram {
    /// Smoothed target histogram.
    pub fn from_counts(memory: usize, counts: Vec<u64>) -> Result<Self, EntropyError> {
        Self::check_shape(memory, counts.len())?;
        let total = counts.iter().sum::<u64>() as f64 + PSEUDO_COUNT * counts.len() as f64;
        let masses = counts.iter().map(|&c| (c as f64 + PSEUDO_COUNT) / total).collect();
        Ok(Self { memory, counts, masses })
    }

    /// Raw frequencies, as used for a candidate's `D^cand`.
    pub fn empirical(memory: usize, counts: Vec<u64>) -> Result<Self, EntropyError> {
        Self::check_shape(memory, counts.len())?;
        let total = counts.iter().sum::<u64>();
        if total == 0 {
            return Err(EntropyError::InvalidParameter("empty histogram".into()));
        }
        let masses = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Ok(Self { memory, counts, masses })
    }

    pub fn from_masses(memory: usize, masses: Vec<f64>) -> Result<Self, EntropyError> {
        Self::check_shape(memory, masses.len())?;
        let sum: f64 = masses.iter().sum();
        if masses.iter().any(|m| !(*m >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(EntropyError::InvalidParameter("masses must be a distribution".into()));
        }
        Ok(Self { memory, counts: vec![0; masses.len()], masses })
    }

    /// Histogram of raw entropy samples.
    pub fn from_samples(memory: usize, w_bins: usize, samples: &[f64], smoothed: bool) -> Result<Self, EntropyError> {
        Self::check_shape(memory, w_bins)?;
        let mut counts = vec![0u64; w_bins];
        for &h in samples {
            counts[bin_of(h, memory, w_bins)] += 1;
        }
        if smoothed {
            Self::from_counts(memory, counts)
        } else {
            Self::empirical(memory, counts)
        }
    }

    fn check_shape(memory: usize, w_bins: usize) -> Result<(), EntropyError> {
        if memory == 0 || w_bins == 0 {
            return Err(EntropyError::InvalidParameter("need m >= 1 and at least one bin".into()));
        }
        Ok(())
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn w_bins(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn samples(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `[low, high)` entropy range of bin `j`.
    pub fn bin_range(&self, j: usize) -> (f64, f64) {
        let width = self.memory as f64 / self.w_bins() as f64;
        (j as f64 * width, (j + 1) as f64 * width)
    }

    /// Mean entropy with each bin at its midpoint.
    pub fn mean(&self) -> f64 {
        (0..self.w_bins())
            .map(|j| {
                let (lo, hi) = self.bin_range(j);
                self.masses[j] * (lo + hi) / 2.0
            })
            .sum()
    }

    /// Total variation distance.
    pub fn statistical_distance(&self, other: &Self) -> Result<f64, EntropyError> {
        self.same_shape(other)?;
        Ok(0.5 * self.masses.iter().zip(&other.masses).map(|(a, b)| (a - b).abs()).sum::<f64>())
    }

    fn same_shape(&self, other: &Self) -> Result<(), EntropyError> {
        if self.w_bins() != other.w_bins() || self.memory != other.memory {
            return Err(EntropyError::BinMismatch { left: self.w_bins(), right: other.w_bins() });
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn bin_of(h: f64, memory: usize, w_bins: usize) -> usize {
    let j = (h / memory as f64 * w_bins as f64) as usize;
    j.min(w_bins - 1)
}

/// `log2(D^good_j / D^bad_j)` per bin.
pub fn log_ratios(good: &EntropyHistogram, bad: &EntropyHistogram) -> Result<Vec<f64>, EntropyError> {
    good.same_shape(bad)?;
    if good.masses.iter().chain(&bad.masses).any(|&m| m <= 0.0) {
        return Err(EntropyError::InvalidParameter("target histograms need positive masses".into()));
    }
    Ok(good.masses.iter().zip(&bad.masses).map(|(g, b)| g.log2() - b.log2()).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NPStats {
    pub t_good: f64,
    pub t_bad: f64,
    pub t_cand: f64,
}

pub fn np_stats(good: &EntropyHistogram, bad: &EntropyHistogram, cand: &EntropyHistogram) -> Result<NPStats, EntropyError> {
    let x = log_ratios(good, bad)?;
    good.same_shape(cand)?;
    let dot = |h: &EntropyHistogram| h.masses.iter().zip(&x).map(|(d, x)| d * x).sum::<f64>();
    Ok(NPStats { t_good: dot(good), t_bad: dot(bad), t_cand: dot(cand) })
}

/// CSV rows `bin_low,bin_high,good_mass,bad_mass`.
pub fn histogram_csv(good: &EntropyHistogram, bad: &EntropyHistogram) -> Result<String, EntropyError> {
    good.same_shape(bad)?;
    let mut out = String::from("bin_low,bin_high,good_mass,bad_mass\n");
    for j in 0..good.w_bins() {
        let (lo, hi) = good.bin_range(j);
        out.push_str(&format!("{lo},{hi},{},{}\n", good.masses[j], bad.masses[j]));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetParams {
    pub w_bins: usize,
    /// Number of simulated chains.
    pub samples: usize,
    /// Steps sampled individually before the stationary regime; defaults to `8m`.
    pub burn_in: Option<usize>,
    /// Stationary samples taken from each chain after the burn-in.
    pub stationary_steps: usize,
    pub seed: u64,
}

impl Default for TargetParams {
    fn default() -> Self {
        Self { w_bins: DEFAULT_W_BINS, samples: 20_000, burn_in: None, stationary_steps: 32, seed: 0 }
    }
}

/// Good and bad entropy distributions for every step of the recursion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetSet {
    pub encoder: EncoderSpec,
    pub sigma: f64,
    pub burn_in: usize,
    /// `(D^good, D^bad)` for steps `0..burn_in`, starting from the zero state.
    pub per_step: Vec<(EntropyHistogram, EntropyHistogram)>,
    pub stationary: (EntropyHistogram, EntropyHistogram),
}

impl TargetSet {
    /// Targets for 0-based step `i`.
    pub fn at(&self, i: usize) -> (&EntropyHistogram, &EntropyHistogram) {
        match self.per_step.get(i) {
            Some((g, b)) => (g, b),
            None => (&self.stationary.0, &self.stationary.1),
        }
    }

    pub fn memory(&self) -> usize {
        self.stationary.0.memory()
    }

    pub fn w_bins(&self) -> usize {
        self.stationary.0.w_bins()
    }
}

fn check_encoder(enc: &EncoderSpec) -> Result<(), EntropyError> {
    if !enc.has_direct_term() || enc.memory() == 0 {
        return Err(EntropyError::NoDistinguisher(enc.to_string()));
    }
    Ok(())
}

const CHAINS_PER_TASK: usize = 256;

/// Simulates `samples` chains of the forward recursion on random data.
///
/// At each step the good entropy uses the true couple; the bad one replaces
/// the systematic value by a fresh channel output of an unrelated random bit,
/// and the chain then continues on the true couple.
pub fn sample_targets(enc: &EncoderSpec, sigma: f64, params: &TargetParams) -> Result<TargetSet, EntropyError> {
    check_encoder(enc)?;
    Channel::Gaussian { sigma }.validate()?;
    if params.samples == 0 || params.w_bins == 0 || params.stationary_steps == 0 {
        return Err(EntropyError::InvalidParameter("samples, w_bins and stationary_steps must be positive".into()));
    }
    let m = enc.memory();
    let burn_in = params.burn_in.unwrap_or(8 * m);
    let w = params.w_bins;
    let kernel = Kernel::new(&make_trellis(enc));
    let ch = Channel::Gaussian { sigma };
    let noise = Normal::new(0.0, sigma).expect("validated sigma");
    let len = burn_in + params.stationary_steps;
    let base = seed::derive(params.seed, seed::label::TARGETS);

    let tasks = params.samples.div_ceil(CHAINS_PER_TASK);
    // counts[step][good/bad][bin], last step slot is the stationary pool
    let merged = (0..tasks)
        .into_par_iter()
        .map(|task| {
            let mut rng = seed::rng(seed::derive(base, task as u64));
            let mut counts = vec![[vec![0u64; w], vec![0u64; w]]; burn_in + 1];
            let chains = CHAINS_PER_TASK.min(params.samples - task * CHAINS_PER_TASK);
            let mut f = vec![0.0; kernel.states];
            let mut next = vec![0.0; kernel.states];
            let mut scratch = vec![0.0; kernel.states];
            for _ in 0..chains {
                f.iter_mut().for_each(|v| *v = 0.0);
                f[0] = 1.0;
                let mut s = 0usize;
                for i in 0..len {
                    let b = rng.gen_range(0..2usize);
                    let z = kernel.out[2 * s + b];
                    s = kernel.next[2 * s + b];
                    let x_obs = antipodal(b as u8) + noise.sample(&mut rng);
                    let z_obs = antipodal(z as u8) + noise.sample(&mut rng);
                    let fake = antipodal(rng.gen_range(0..2u8)) + noise.sample(&mut rng);
                    let lz = ch.likelihood(Some(z_obs));
                    let h_bad = kernel.step_entropy(&f, ch.likelihood(Some(fake)), lz, &mut scratch);
                    kernel.step_norm(&f, ch.likelihood(Some(x_obs)), lz, &mut next);
                    let h_good = entropy_of(&next);
                    std::mem::swap(&mut f, &mut next);
                    let slot = i.min(burn_in);
                    counts[slot][0][bin_of(h_good, m, w)] += 1;
                    counts[slot][1][bin_of(h_bad, m, w)] += 1;
                }
            }
            counts
        })
        .reduce(
            || vec![[vec![0u64; w], vec![0u64; w]]; burn_in + 1],
            |mut a, b| {
                for (sa, sb) in a.iter_mut().zip(b) {
                    for k in 0..2 {
                        for (x, y) in sa[k].iter_mut().zip(&sb[k]) {
                            *x += y;
                        }
                    }
                }
                a
            },
        );

    let mut hists = merged
        .into_iter()
        .map(|[g, b]| Ok((EntropyHistogram::from_counts(m, g)?, EntropyHistogram::from_counts(m, b)?)))
        .collect::<Result<Vec<_>, EntropyError>>()?;
    let stationary = hists.pop().expect("stationary slot");
    Ok(TargetSet { encoder: enc.clone(), sigma, burn_in, per_step: hists, stationary })
}

/// Stationary `(D^good, D^bad)`.
pub fn sample_target_distributions(
    enc: &EncoderSpec,
    sigma: f64,
    w_bins: usize,
    samples: usize,
    burn_in: usize,
) -> Result<(EntropyHistogram, EntropyHistogram), EntropyError> {
    let params = TargetParams { w_bins, samples, burn_in: Some(burn_in), ..TargetParams::default() };
    Ok(sample_targets(enc, sigma, &params)?.stationary)
}
