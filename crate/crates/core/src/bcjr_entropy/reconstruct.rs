use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::forward::{Channel, Kernel};
use super::histogram::{log_ratios, TargetSet};
use super::threshold::Distinguisher;
use super::EntropyError;
use crate::turbo_sim::{make_trellis, EncoderSpec, InterceptedDataset, Permutation};

/// Log ratios and threshold used at one step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepTest {
    pub log_ratios: Vec<f64>,
    pub threshold: f64,
}

impl StepTest {
    /// `T_cand` of a set of entropy bins.
    pub fn score(&self, bins: impl IntoIterator<Item = usize>) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for j in bins {
            sum += self.log_ratios[j];
            n += 1;
        }
        sum / n as f64
    }
}

/// Per-step tests at a fixed block count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub blocks: usize,
    pub alpha: f64,
    pub beta: f64,
    pub per_step: Vec<StepTest>,
    pub stationary: StepTest,
}

impl Schedule {
    /// Thresholds balancing the two error estimates at `blocks` for each
    /// step's own target pair.
    pub fn new(targets: &TargetSet, alpha: f64, beta: f64, blocks: usize) -> Result<Self, EntropyError> {
        let test = |good, bad| -> Result<StepTest, EntropyError> {
            let x = log_ratios(good, bad)?;
            let threshold = match Distinguisher::new(good, bad, alpha, beta) {
                Ok(d) => d.operating_point(blocks)?.threshold,
                // no information at this step: keep everything
                Err(EntropyError::IdenticalDistributions) => f64::NEG_INFINITY,
                Err(e) => return Err(e),
            };
            Ok(StepTest { log_ratios: x, threshold })
        };
        let per_step = targets.per_step.iter().map(|(g, b)| test(g, b)).collect::<Result<_, _>>()?;
        let stationary = test(&targets.stationary.0, &targets.stationary.1)?;
        Ok(Self { blocks, alpha, beta, per_step, stationary })
    }

    pub fn at(&self, i: usize) -> &StepTest {
        self.per_step.get(i).unwrap_or(&self.stationary)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructOptions {
    /// Defaults to `1/N`.
    pub alpha: Option<f64>,
    /// Defaults to `0.01/N`.
    pub beta: Option<f64>,
    /// Keep at most this many candidates, best cumulative score first.
    pub beam: Option<usize>,
    /// Hard limit applied even without a beam.
    pub max_candidates: usize,
    /// Entries of `Π` fixed in advance, indexed by position.
    pub known: Vec<Option<usize>>,
    /// Defaults to the Gaussian channel of the dataset.
    pub channel: Option<Channel>,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        Self { alpha: None, beta: None, beam: None, max_candidates: 1024, known: Vec::new(), channel: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Survivor {
    /// `columns[i] = Π(i)`
    pub columns: Vec<usize>,
    /// Sum of `T_cand` over the filtered steps.
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionOutcome {
    pub permutation: Option<Permutation>,
    /// Full-length candidates, best score first.
    pub survivors: Vec<Survivor>,
    /// Candidate count after each step.
    pub trace: Vec<usize>,
    /// Step at which the list became empty.
    pub failed_at: Option<usize>,
    /// Steps at which the beam or the hard limit dropped candidates.
    pub capped_steps: Vec<usize>,
    pub schedule: Schedule,
}

struct Candidate {
    columns: Vec<usize>,
    used: Vec<bool>,
    /// `states[k * S + s]`
    states: Vec<f64>,
    score: f64,
}

pub fn reconstruct_permutation(
    ds: &InterceptedDataset,
    enc: &EncoderSpec,
    targets: &TargetSet,
    opts: &ReconstructOptions,
) -> Result<ReconstructionOutcome, EntropyError> {
    if &targets.encoder != enc {
        return Err(EntropyError::InvalidParameter(format!("targets were sampled for {}, not {enc}", targets.encoder)));
    }
    let n = ds.block_len();
    let m = ds.blocks();
    if n == 0 || m == 0 {
        return Err(EntropyError::InvalidParameter("empty dataset".into()));
    }
    if !opts.known.is_empty() && opts.known.len() != n {
        return Err(EntropyError::InvalidParameter(format!("known has {} entries for N = {n}", opts.known.len())));
    }
    let known: Vec<Option<usize>> = if opts.known.is_empty() { vec![None; n] } else { opts.known.clone() };
    let mut reserved = vec![false; n];
    for &j in known.iter().flatten() {
        if j >= n || std::mem::replace(&mut reserved[j], true) {
            return Err(EntropyError::InvalidParameter(format!("known entries are not injective or out of range at column {j}")));
        }
    }
    let channel = opts.channel.unwrap_or(Channel::Gaussian { sigma: ds.sigma() });
    channel.validate()?;
    let alpha = opts.alpha.unwrap_or(1.0 / n as f64);
    let beta = opts.beta.unwrap_or(0.01 / n as f64);
    let schedule = Schedule::new(targets, alpha, beta, m)?;

    let kernel = Kernel::new(&make_trellis(enc));
    let s_count = kernel.states;
    let w_bins = targets.w_bins();
    // lx[j * M + k], lz[i * M + k]
    let mut lx = Vec::with_capacity(n * m);
    let mut lz = Vec::with_capacity(n * m);
    for j in 0..n {
        for k in 0..m {
            lx.push(channel.likelihood(Some(ds.x_at(k, j))));
        }
    }
    for i in 0..n {
        let erased = ds.z_erased(i);
        for k in 0..m {
            lz.push(channel.likelihood(if erased { None } else { Some(ds.z_at(k, i)) }));
        }
    }

    let mut init = vec![0.0; m * s_count];
    for k in 0..m {
        init[k * s_count] = 1.0;
    }
    let mut cands = vec![Candidate { columns: Vec::with_capacity(n), used: vec![false; n], states: init, score: 0.0 }];
    let mut trace = Vec::with_capacity(n);
    let mut capped_steps = Vec::new();
    let mut failed_at = None;

    for i in 0..n {
        let lz_i = &lz[i * m..(i + 1) * m];
        let test = schedule.at(i);
        // (parent, column, T_cand)
        let mut picks: Vec<(usize, usize, f64)> = match known[i] {
            Some(j) => cands.iter().enumerate().filter(|(_, c)| !c.used[j]).map(|(ci, _)| (ci, j, 0.0)).collect(),
            None => {
                let jobs: Vec<(usize, usize)> = cands
                    .iter()
                    .enumerate()
                    .flat_map(|(ci, c)| (0..n).filter(|&j| !c.used[j] && !reserved[j]).map(move |j| (ci, j)))
                    .collect();
                jobs.into_par_iter()
                    .map_init(
                        || vec![0.0; s_count],
                        |scratch, (ci, j)| {
                            let lx_j = &lx[j * m..(j + 1) * m];
                            let sum = kernel.score_blocks(&cands[ci].states, lx_j, lz_i, &test.log_ratios, w_bins, scratch);
                            (ci, j, sum / m as f64)
                        },
                    )
                    .filter(|&(_, _, t)| t > test.threshold)
                    .collect()
            }
        };

        let cap = opts.beam.map_or(opts.max_candidates, |b| b.min(opts.max_candidates)).max(1);
        if picks.len() > cap {
            picks.sort_by(|a, b| {
                let sa = cands[a.0].score + a.2;
                let sb = cands[b.0].score + b.2;
                sb.total_cmp(&sa).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1))
            });
            picks.truncate(cap);
            picks.sort_by_key(|&(ci, j, _)| (ci, j));
            capped_steps.push(i);
        }

        let next: Vec<Candidate> = picks
            .into_par_iter()
            .map(|(ci, j, t)| {
                let parent = &cands[ci];
                let lx_j = &lx[j * m..(j + 1) * m];
                let mut states = vec![0.0; m * s_count];
                for k in 0..m {
                    let r = k * s_count..(k + 1) * s_count;
                    kernel.step_norm(&parent.states[r.clone()], lx_j[k], lz_i[k], &mut states[r]);
                }
                let mut columns = parent.columns.clone();
                columns.push(j);
                let mut used = parent.used.clone();
                used[j] = true;
                Candidate { columns, used, states, score: parent.score + t }
            })
            .collect();
        cands = next;
        trace.push(cands.len());
        if cands.is_empty() {
            failed_at = Some(i);
            break;
        }
    }

    let mut survivors: Vec<Survivor> = cands.into_iter().map(|c| Survivor { columns: c.columns, score: c.score }).collect();
    survivors.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.columns.cmp(&b.columns)));
    let permutation = survivors.first().map(|s| Permutation::new(s.columns.clone())).transpose()?;
    Ok(ReconstructionOutcome { permutation, survivors, trace, failed_at, capped_steps, schedule })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bcjr_entropy::{sample_targets, TargetParams};
    use crate::seed;
    use crate::turbo_sim::{generate_dataset, TurboSpec};

    fn enc57() -> EncoderSpec {
        "1+D^2/1+D+D^2".parse().unwrap()
    }

    fn spec(n: usize, s: u64) -> TurboSpec {
        TurboSpec::new(Permutation::random(n, &mut seed::rng(s)), enc57(), enc57()).unwrap()
    }

    #[test]
    fn recovers_small_low_noise_instance() {
        let sp = spec(32, 1);
        let ds = generate_dataset(&sp, 40, 0.43, 2).unwrap();
        let targets = sample_targets(&enc57(), 0.43, &TargetParams { samples: 4000, ..TargetParams::default() }).unwrap();
        let out = reconstruct_permutation(&ds, &enc57(), &targets, &ReconstructOptions::default()).unwrap();
        assert_eq!(out.permutation.as_ref(), Some(&sp.perm), "trace {:?}", out.trace);
        assert_eq!(out.trace.len(), 32);
        assert_eq!(out.failed_at, None);
    }

    #[test]
    fn known_entries_are_kept() {
        let sp = spec(24, 3);
        let ds = generate_dataset(&sp, 40, 0.43, 4).unwrap();
        let targets = sample_targets(&enc57(), 0.43, &TargetParams { samples: 2000, ..TargetParams::default() }).unwrap();
        let mut known = vec![None; 24];
        for i in (0..24).step_by(3) {
            known[i] = Some(sp.perm.get(i));
        }
        let opts = ReconstructOptions { known, ..ReconstructOptions::default() };
        let out = reconstruct_permutation(&ds, &enc57(), &targets, &opts).unwrap();
        assert_eq!(out.permutation.as_ref(), Some(&sp.perm));
        let bad = ReconstructOptions { known: vec![Some(0), Some(0)], ..ReconstructOptions::default() };
        assert!(reconstruct_permutation(&ds, &enc57(), &targets, &bad).is_err());
    }

    #[test]
    fn beam_caps_the_list() {
        let sp = spec(16, 5);
        let ds = generate_dataset(&sp, 10, 1.0, 6).unwrap();
        let targets = sample_targets(&enc57(), 1.0, &TargetParams { samples: 2000, ..TargetParams::default() }).unwrap();
        let opts = ReconstructOptions { beam: Some(3), ..ReconstructOptions::default() };
        let out = reconstruct_permutation(&ds, &enc57(), &targets, &opts).unwrap();
        assert!(out.trace.iter().all(|&c| c <= 3));
    }

    #[test]
    fn mismatched_targets_are_rejected() {
        let ds = generate_dataset(&spec(8, 1), 4, 0.5, 1).unwrap();
        let other: EncoderSpec = "1+D+D^2/1+D^2".parse().unwrap();
        let targets = sample_targets(&other, 0.5, &TargetParams { samples: 100, ..TargetParams::default() }).unwrap();
        assert!(reconstruct_permutation(&ds, &enc57(), &targets, &ReconstructOptions::default()).is_err());
    }
}
