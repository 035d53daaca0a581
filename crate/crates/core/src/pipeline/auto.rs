use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{EncoderTrial, PhaseRecord, Provenance, ReconstructionReport, REPORT_VERSION};
use super::{ExperimentConfig, Method2Config, PipelineError};
use crate::bcjr_entropy::{reconstruct_permutation, sample_targets, solve_threshold, EntropyError, ReconstructOptions};
use crate::dualword_recon::{
    build_classification, identify_tolerant, recover_positions, search_run, DualwordError, EncoderUniverse, ParityCheck, PermutationConstraint,
};
use crate::seed;
use crate::turbo_sim::{EncoderSpec, InterceptedDataset, Permutation};

/// Runs the combined attack described by `config`.
pub fn auto_reconstruct(config: &ExperimentConfig) -> Result<ReconstructionReport, PipelineError> {
    let (ds, planted) = config.materialize()?;
    reconstruct_dataset(config, &ds, planted.as_ref())
}

struct Constrained {
    encoder: EncoderSpec,
    constraint: PermutationConstraint,
    /// Indices into the full check list of the checks kept.
    active: Vec<usize>,
}

/// Drops one check of each contradicting pair, the less supported one,
/// until the remaining checks are consistent under `enc`.
fn constrain(checks: &[ParityCheck], enc: &EncoderSpec, n: usize, notes: &mut Vec<String>) -> Result<Constrained, PipelineError> {
    let mut active: Vec<usize> = (0..checks.len()).collect();
    loop {
        let subset: Vec<ParityCheck> = active.iter().map(|&i| checks[i].clone()).collect();
        match recover_positions(&subset, enc, n) {
            Ok(constraint) => return Ok(Constrained { encoder: enc.clone(), constraint, active }),
            Err(DualwordError::Contradiction { first, second }) => {
                let drop = if first.satisfied < second.satisfied { first } else { second };
                let pos = active.iter().position(|&i| checks[i] == *drop).expect("check comes from the subset");
                notes.push(format!("{enc}: dropped contradicting check ending at {}", drop.end()));
                active.remove(pos);
            }
            Err(e) => return Err(e.into()),
        }
    }
}

fn merge_checks(into: &mut Vec<ParityCheck>, found: Vec<ParityCheck>) {
    for c in found {
        if !into.iter().any(|o| o.same_support(&c)) {
            into.push(c);
        }
    }
}

fn encoder_range(config: &ExperimentConfig) -> Vec<EncoderSpec> {
    let in_range = |e: &EncoderSpec| (config.min_degree..=config.max_degree).contains(&e.memory());
    match &config.encoders {
        Some(list) => list.clone(),
        None => EncoderUniverse::new(config.max_degree).encoders().into_iter().filter(in_range).collect(),
    }
}

fn identify(checks: &[ParityCheck], config: &ExperimentConfig, notes: &mut Vec<String>) -> Result<Vec<EncoderSpec>, PipelineError> {
    let m1 = &config.method1;
    let table = build_classification(EncoderUniverse::new(config.max_degree), m1.classification_weight, m1.max_lambda_degree)?;
    let (ids, exact) = identify_tolerant(checks, &table)?;
    if !exact {
        notes.push("no encoder admits every check; identified by vote".into());
    }
    let allowed = encoder_range(config);
    Ok(ids.into_iter().filter(|e| allowed.contains(e)).collect())
}

pub fn reconstruct_dataset(
    config: &ExperimentConfig,
    ds: &InterceptedDataset,
    planted: Option<&Permutation>,
) -> Result<ReconstructionReport, PipelineError> {
    let n = ds.block_len();
    let mut notes = Vec::new();
    let mut phases = Vec::new();
    let mut checks: Vec<ParityCheck> = Vec::new();
    let mut history = Vec::new();
    let mut identified: Vec<EncoderSpec> = Vec::new();
    let mut best: Option<Constrained> = None;

    if !config.skip_dualword {
        let clock = Instant::now();
        let hd = ds.hard_decisions();
        let params = config.method1.search_params(seed::derive(config.seed, seed::label::SEARCH));
        match search_run(&hd, &params, 0) {
            Ok(found) => merge_checks(&mut checks, found),
            Err(e) => notes.push(format!("search run 0 failed: {e}")),
        }
        let enough = checks.len() >= config.method1.min_checks;
        if enough {
            identified = identify(&checks, config, &mut notes)?;
            best = pick_best(&checks, &identified, n, &mut notes)?;
        } else {
            notes.push(format!("only {} checks after the first run; skipping to entropy reconstruction", checks.len()));
        }
        let np = best.as_ref().map_or(n, |b| b.constraint.unresolved());
        history.push(np);
        phases.push(PhaseRecord { phase: 1, name: "dualword search".into(), n_prime: np, wall_seconds: clock.elapsed().as_secs_f64() });

        if enough && !identified.is_empty() {
            let clock = Instant::now();
            let mut prev = np;
            for run in 1..config.method1.max_runs {
                if prev == 0 {
                    break;
                }
                match search_run(&hd, &params, run) {
                    Ok(found) => merge_checks(&mut checks, found),
                    Err(e) => {
                        notes.push(format!("search run {run} failed: {e}"));
                        break;
                    }
                }
                identified = identify(&checks, config, &mut notes)?;
                best = pick_best(&checks, &identified, n, &mut notes)?;
                let np = best.as_ref().map_or(n, |b| b.constraint.unresolved());
                history.push(np);
                let decrease = (prev - np.min(prev)) as f64 / prev as f64;
                prev = np.min(prev);
                if decrease < config.method1.min_decrease {
                    break;
                }
            }
            phases.push(PhaseRecord { phase: 2, name: "repeated search".into(), n_prime: prev, wall_seconds: clock.elapsed().as_secs_f64() });
        }
    }

    let mut permutation = vec![None; n];
    let mut provenance = vec![None; n];
    if let Some(b) = &best {
        for (i, r) in b.constraint.resolved().iter().enumerate() {
            if let Some(x) = r {
                permutation[i] = Some(*x);
                let local = b.constraint.provenance(i).expect("resolved entries have provenance");
                provenance[i] = Some(Provenance::ParityCheck { check: b.active[local] });
            }
        }
    }
    let mut encoder = best.as_ref().map(|b| b.encoder.clone());
    let mut trials = Vec::new();
    let mut trace = Vec::new();

    let unresolved = permutation.iter().filter(|p| p.is_none()).count();
    if unresolved == 0 {
        notes.push("parity checks resolved every position; entropy phase skipped".into());
    } else {
        let clock = Instant::now();
        let mut order: Vec<EncoderSpec> = if identified.is_empty() { encoder_range(config) } else { identified.clone() };
        if let Some(e) = &encoder {
            order.retain(|x| x != e);
            order.insert(0, e.clone());
        }
        let target_seed = seed::derive(config.seed, seed::label::TARGETS);
        for enc in order {
            let known = if best.as_ref().is_some_and(|b| b.encoder == enc) {
                permutation.clone()
            } else if !checks.is_empty() && identified.contains(&enc) {
                let c = constrain(&checks, &enc, n, &mut notes)?;
                c.constraint.resolved().to_vec()
            } else {
                vec![None; n]
            };
            let targets = match sample_targets(&enc, ds.sigma(), &config.method2.target_params(target_seed)) {
                Ok(t) => t,
                Err(EntropyError::NoDistinguisher(_)) => {
                    notes.push(format!("{enc}: no entropy distinguisher, skipped"));
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            let opts = reconstruct_options(&config.method2, known.clone());
            let out = reconstruct_permutation(ds, &enc, &targets, &opts)?;
            trials.push(EncoderTrial {
                encoder: enc.clone(),
                completed: out.permutation.is_some(),
                failed_at: out.failed_at,
                survivors: out.survivors.len(),
                max_candidates: out.trace.iter().copied().max().unwrap_or(0),
            });
            if let Some(p) = out.permutation {
                for i in 0..n {
                    if known[i].is_none() {
                        provenance[i] = Some(Provenance::EntropyStep { step: i });
                    } else if permutation[i].is_none() {
                        provenance[i] = Some(Provenance::EntropyStep { step: i });
                    }
                    permutation[i] = Some(p.get(i));
                }
                if !out.capped_steps.is_empty() {
                    notes.push(format!("{enc}: candidate list capped at {} steps", out.capped_steps.len()));
                }
                encoder = Some(enc);
                trace = out.trace;
                break;
            }
        }
        let np = permutation.iter().filter(|p| p.is_none()).count();
        if np > 0 {
            notes.push("no encoder survived the entropy reconstruction".into());
        }
        phases.push(PhaseRecord { phase: 3, name: "entropy reconstruction".into(), n_prime: np, wall_seconds: clock.elapsed().as_secs_f64() });
    }

    let success = permutation.iter().all(|p| p.is_some());
    let (proportion_recovered, planted_match) = match planted {
        Some(pl) if pl.len() == n => {
            let hits = (0..n).filter(|&i| permutation[i] == Some(pl.get(i))).count();
            (Some(hits as f64 / n as f64), Some(hits == n))
        }
        _ => (None, None),
    };
    Ok(ReconstructionReport {
        version: REPORT_VERSION,
        config: config.clone(),
        block_len: n,
        blocks: ds.blocks(),
        sigma: ds.sigma(),
        identified,
        encoder,
        permutation,
        provenance,
        checks,
        n_prime_history: history,
        phases,
        candidate_trace: trace,
        encoder_trials: trials,
        success,
        proportion_recovered,
        planted_match,
        diagnostics: notes,
    })
}

fn pick_best(checks: &[ParityCheck], ids: &[EncoderSpec], n: usize, notes: &mut Vec<String>) -> Result<Option<Constrained>, PipelineError> {
    let mut best: Option<Constrained> = None;
    for enc in ids {
        let c = constrain(checks, enc, n, notes)?;
        if best.as_ref().is_none_or(|b| c.constraint.unresolved() < b.constraint.unresolved()) {
            best = Some(c);
        }
    }
    Ok(best)
}

fn reconstruct_options(m2: &Method2Config, known: Vec<Option<usize>>) -> ReconstructOptions {
    ReconstructOptions {
        alpha: m2.alpha,
        beta: m2.beta,
        beam: m2.beam,
        max_candidates: m2.max_candidates,
        known,
        channel: None,
    }
}

/// Block count the large-deviation analysis asks for with `alpha = 1/N`,
/// `beta = 0.01/N` (or the configured rates).
pub fn theory_blocks(enc: &EncoderSpec, sigma: f64, n: usize, m2: &Method2Config, seed: u64) -> Result<usize, PipelineError> {
    let targets = sample_targets(enc, sigma, &m2.target_params(seed::derive(seed, seed::label::TARGETS)))?;
    let alpha = m2.alpha.unwrap_or(1.0 / n as f64);
    let beta = m2.beta.unwrap_or(0.01 / n as f64);
    Ok(solve_threshold(&targets.stationary.0, &targets.stationary.1, alpha, beta)?.m_min)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteRow {
    pub label: String,
    pub n: usize,
    pub sigma: f64,
    pub blocks: usize,
    pub m_theory: Option<usize>,
    pub seconds: f64,
    pub proportion_recovered: Option<f64>,
    pub success: bool,
    pub error: Option<String>,
}

impl SuiteRow {
    pub const CSV_HEADER: &'static str = "label,n,sigma,blocks,m_theory,seconds,proportion_recovered,success,error";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{:.3},{},{},{}",
            self.label.replace(',', ";"),
            self.n,
            self.sigma,
            self.blocks,
            self.m_theory.map(|m| m.to_string()).unwrap_or_default(),
            self.seconds,
            self.proportion_recovered.map(|p| format!("{p:.6}")).unwrap_or_default(),
            self.success,
            self.error.clone().unwrap_or_default().replace(',', ";")
        )
    }
}

fn suite_row(config: &ExperimentConfig) -> SuiteRow {
    let clock = Instant::now();
    let label = config.label.clone().unwrap_or_default();
    let gen = config.generate.as_ref();
    let mut row = SuiteRow {
        label,
        n: gen.map_or(0, |g| g.n),
        sigma: gen.map_or(f64::NAN, |g| g.sigma),
        blocks: gen.map_or(0, |g| g.blocks),
        m_theory: None,
        seconds: 0.0,
        proportion_recovered: None,
        success: false,
        error: None,
    };
    match auto_reconstruct(config) {
        Ok(report) => {
            row.n = report.block_len;
            row.sigma = report.sigma;
            row.blocks = report.blocks;
            row.success = report.planted_match.unwrap_or(report.success);
            row.proportion_recovered = report.proportion_recovered;
            let enc = gen.map(|g| g.encoder.clone()).or(report.encoder.clone());
            if let Some(enc) = enc {
                row.m_theory = theory_blocks(&enc, report.sigma, report.block_len, &config.method2, config.seed).ok();
            }
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row.seconds = clock.elapsed().as_secs_f64();
    row
}

/// One row per configuration; a failing row records its error and the
/// others still run.
pub fn run_experiment_suite(configs: &[ExperimentConfig]) -> Vec<SuiteRow> {
    configs.par_iter().map(suite_row).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessStats {
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    /// `(seed, error)` of trials that did not produce a report.
    pub errors: Vec<(u64, String)>,
}

/// Seed of trial `t` under master seed `seed`.
pub fn trial_seed(seed: u64, t: usize) -> u64 {
    seed::derive(seed::derive(seed, seed::label::TRIALS), t as u64)
}

/// Fraction of independently seeded trials recovering the planted permutation.
pub fn partial_success_stats(config: &ExperimentConfig, trials: usize) -> Result<SuccessStats, PipelineError> {
    if trials == 0 {
        return Err(PipelineError::Config("need at least one trial".into()));
    }
    if config.generate.is_none() {
        return Err(PipelineError::Config("success statistics need a generation spec".into()));
    }
    let results: Vec<(u64, Result<bool, String>)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut c = config.clone();
            c.seed = trial_seed(config.seed, t);
            c.output = Default::default();
            let r = auto_reconstruct(&c).map(|rep| rep.planted_match == Some(true)).map_err(|e| e.to_string());
            (c.seed, r)
        })
        .collect();
    let successes = results.iter().filter(|(_, r)| matches!(r, Ok(true))).count();
    let errors = results.into_iter().filter_map(|(s, r)| r.err().map(|e| (s, e))).collect();
    Ok(SuccessStats { trials, successes, rate: successes as f64 / trials as f64, errors })
}
