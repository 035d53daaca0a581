mod args;

use std::fs;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use turbo_recon::bcjr_entropy::{histogram_csv, reconstruct_permutation, sample_targets, solve_threshold, ReconstructOptions};
use turbo_recon::dualword_recon::{
    build_classification, enumerate_dualwords, find_parity_checks, identify_tolerant, predict_coverage, recover_positions, total_w0,
    EncoderUniverse, ParityCheck,
};
use turbo_recon::pipeline::{auto_reconstruct, run_experiment_suite, table_configs, ExperimentConfig, GenerationSpec, SuiteRow};
use turbo_recon::seed;
use turbo_recon::turbo_sim::{load_dataset, save_dataset, tau_from_sigma, EncoderSpec, InterceptedDataset, Permutation};

use args::*;

const DEFAULT_ENCODER: &str = "1+D^2/1+D+D^2";

struct Ctx {
    config: Option<ExperimentConfig>,
    seed: u64,
    seed_flag: Option<u64>,
}

impl Ctx {
    fn config_or_default(&self) -> ExperimentConfig {
        let mut c = self.config.clone().unwrap_or_else(|| ExperimentConfig::from_dataset(Default::default(), self.seed));
        c.seed = self.seed;
        c
    }

    fn dataset(&self, data: &DataArgs) -> Result<(InterceptedDataset, Option<Permutation>)> {
        let planted = data.planted.as_deref().map(Permutation::load).transpose()?;
        if let Some(p) = &data.dataset {
            let ds = load_dataset(p).with_context(|| format!("loading {}", p.display()))?;
            return Ok((ds, planted));
        }
        let Some(mut c) = self.config.clone() else {
            bail!("no dataset: pass --dataset or a --config with `dataset` or `generate`");
        };
        c.seed = self.seed;
        let (ds, from_config) = c.materialize()?;
        Ok((ds, planted.or(from_config)))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    let config = cli.config.as_deref().map(ExperimentConfig::load).transpose().context("reading --config")?;
    let seed = cli.seed.or(config.as_ref().map(|c| c.seed)).unwrap_or(0);
    let ctx = Ctx { config, seed, seed_flag: cli.seed };
    match cli.command {
        Command::Simulate(a) => simulate(&ctx, a),
        Command::Classify(a) => classify(a),
        Command::DualwordSearch(a) => dualword_search(&ctx, a),
        Command::EntropyPlan(a) => entropy_plan(&ctx, a),
        Command::EntropyReconstruct(a) => entropy_reconstruct(&ctx, a),
        Command::Auto(a) => auto(&ctx, a),
        Command::Suite(a) => suite(&ctx, a),
        Command::Predict(a) => predict(a),
    }
}

fn default_encoder() -> EncoderSpec {
    DEFAULT_ENCODER.parse().expect("literal")
}

fn simulate(ctx: &Ctx, a: SimulateArgs) -> Result<ExitCode> {
    let base = ctx.config.as_ref().and_then(|c| c.generate.clone());
    let pick = |flag: Option<usize>, from: Option<usize>, name: &str| flag.or(from).with_context(|| format!("--{name} is required"));
    let n = pick(a.n, base.as_ref().map(|g| g.n), "n")?;
    let blocks = pick(a.blocks, base.as_ref().map(|g| g.blocks), "blocks")?;
    let sigma = a.sigma.or(base.as_ref().map(|g| g.sigma)).context("--sigma is required")?;
    let encoder = a.encoder.or(base.as_ref().map(|g| g.encoder.clone())).unwrap_or_else(default_encoder);
    let mut spec = GenerationSpec::new(n, blocks, sigma, encoder);
    spec.first_encoder = a.first_encoder.or(base.as_ref().and_then(|g| g.first_encoder.clone()));
    spec.puncture_z = a.puncture_z.or(base.and_then(|g| g.puncture_z));
    let (turbo, ds) = spec.build(ctx.seed)?;
    save_dataset(&a.out, &ds)?;
    if let Some(p) = &a.perm_out {
        turbo.perm.save(p)?;
    }
    println!("wrote {} blocks of length {} (sigma {}, tau {:.6}) to {}", ds.blocks(), ds.block_len(), ds.sigma(), ds.tau(), a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn classify(a: ClassifyArgs) -> Result<ExitCode> {
    let universe = EncoderUniverse { max_degree: a.max_degree, irreducible_feedback: !a.reducible };
    let encoders = universe.encoders().len();
    let table = build_classification(universe, a.weight, a.lambda_degree)?;
    let collisions = table.collisions();
    println!("{encoders} encoders, {} keys up to weight {}", table.len(), a.weight);
    if collisions.is_empty() {
        println!("every encoder has a distinguishing key");
    }
    for group in &collisions {
        let names: Vec<String> = group.iter().map(|e| e.to_string()).collect();
        println!("indistinguishable: {}", names.join("  "));
    }
    if let Some(p) = &a.out {
        table.save(p)?;
    }
    if let Some(p) = &a.checks {
        let checks: Vec<ParityCheck> = serde_json::from_str(&fs::read_to_string(p)?)?;
        let (ids, exact) = identify_tolerant(&checks, &table)?;
        if exact {
            println!("{} check(s) admit {} encoder(s):", checks.len(), ids.len());
        } else {
            println!("no encoder admits all {} check(s); best by vote, {} encoder(s):", checks.len(), ids.len());
        }
        for e in ids {
            println!("  {e}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn dualword_search(ctx: &Ctx, a: SearchArgs) -> Result<ExitCode> {
    let (ds, planted) = ctx.dataset(&a.data)?;
    let m1 = ctx.config_or_default().method1;
    let mut params = m1.search_params(seed::derive(ctx.seed, seed::label::SEARCH));
    params.weight = a.weight.unwrap_or(params.weight);
    params.ell = a.ell.or(params.ell);
    params.span = a.span.unwrap_or(params.span);
    params.runs = a.runs;
    let hd = ds.hard_decisions();
    let checks = find_parity_checks(&hd, &params)?;
    println!("{} check(s), ell = {}, tau = {:.6}", checks.len(), params.ell_for(ds.block_len()), hd.tau());
    for c in &checks {
        let k = c.key();
        println!("end {:>5}  x {:?}  z {:?}  satisfied {}/{}  w0 {}  lambdaQ {}", c.end(), c.x_columns, c.z_offsets, c.satisfied, c.blocks, k.w0, k.lambda_q);
    }
    if let Some(p) = &a.out {
        fs::write(p, serde_json::to_string_pretty(&checks)? + "\n")?;
    }
    if let Some(enc) = &a.encoder {
        let pc = recover_positions(&checks, enc, ds.block_len())?;
        println!("resolved {} of {} positions (N' = {})", pc.resolved_count(), ds.block_len(), pc.unresolved());
        if let Some(pl) = planted {
            let wrong = pc.resolved().iter().enumerate().filter(|(i, r)| r.is_some_and(|x| x != pl.get(*i))).count();
            println!("{wrong} resolved entries differ from the planted permutation");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn entropy_plan(ctx: &Ctx, a: PlanArgs) -> Result<ExitCode> {
    let mut m2 = ctx.config_or_default().method2;
    m2.w_bins = a.w_bins.unwrap_or(m2.w_bins);
    m2.samples = a.samples.unwrap_or(m2.samples);
    let alpha = a.alpha.or(m2.alpha).unwrap_or(1.0 / a.n as f64);
    let beta = a.beta.or(m2.beta).unwrap_or(0.01 / a.n as f64);
    let targets = sample_targets(&a.encoder, a.sigma, &m2.target_params(seed::derive(ctx.seed, seed::label::TARGETS)))?;
    let (good, bad) = &targets.stationary;
    println!("mean entropy: good {:.4}, bad {:.4}; statistical distance {:.4}", good.mean(), bad.mean(), good.statistical_distance(bad)?);
    if let Some(p) = &a.histogram_out {
        fs::write(p, histogram_csv(good, bad)?)?;
    }
    let sol = solve_threshold(good, bad, alpha, beta)?;
    println!("alpha {alpha:.3e}, beta {beta:.3e}");
    println!("T_good {:.5}, T_bad {:.5}, threshold {:.5}", sol.t_good, sol.t_bad, sol.threshold);
    println!("s_alpha {:.4}, s_beta {:.4}", sol.s_alpha, sol.s_beta);
    println!("M_min = {}", sol.m_min);
    Ok(ExitCode::SUCCESS)
}

fn entropy_reconstruct(ctx: &Ctx, a: ReconstructArgs) -> Result<ExitCode> {
    let (ds, planted) = ctx.dataset(&a.data)?;
    let mut m2 = ctx.config_or_default().method2;
    m2.samples = a.samples.unwrap_or(m2.samples);
    let targets = sample_targets(&a.encoder, ds.sigma(), &m2.target_params(seed::derive(ctx.seed, seed::label::TARGETS)))?;
    let opts = ReconstructOptions {
        alpha: m2.alpha,
        beta: m2.beta,
        beam: a.beam.or(m2.beam),
        max_candidates: a.max_candidates.unwrap_or(m2.max_candidates),
        ..ReconstructOptions::default()
    };
    let out = reconstruct_permutation(&ds, &a.encoder, &targets, &opts)?;
    let peak = out.trace.iter().copied().max().unwrap_or(0);
    println!("steps {}, peak candidates {peak}, capped steps {}", out.trace.len(), out.capped_steps.len());
    let Some(perm) = out.permutation else {
        println!("no candidate survived (emptied at step {})", out.failed_at.unwrap_or(0));
        return Ok(ExitCode::from(2));
    };
    println!("recovered a permutation of length {} ({} survivor(s))", perm.len(), out.survivors.len());
    if let Some(pl) = planted {
        let hits = (0..perm.len()).filter(|&i| perm.get(i) == pl.get(i)).count();
        println!("{hits}/{} entries match the planted permutation", perm.len());
    }
    if let Some(p) = &a.out {
        perm.save(p)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn auto(ctx: &Ctx, a: AutoArgs) -> Result<ExitCode> {
    let mut c = ctx.config_or_default();
    if let Some(d) = a.data.dataset {
        c.dataset = Some(d);
        c.generate = None;
    }
    if let Some(n) = a.n {
        let enc = a.encoder.unwrap_or_else(default_encoder);
        c.generate = Some(GenerationSpec::new(n, a.blocks.expect("clap requires"), a.sigma.expect("clap requires"), enc));
        c.dataset = None;
    }
    c.planted = a.data.planted.or(c.planted);
    c.max_degree = a.max_degree.unwrap_or(c.max_degree);
    c.skip_dualword |= a.skip_dualword;
    c.output.report = a.report.or(c.output.report);
    c.output.csv = a.csv.or(c.output.csv);
    let report = auto_reconstruct(&c)?;
    report.write_outputs()?;
    let ids: Vec<String> = report.identified.iter().map(|e| e.to_string()).collect();
    println!("checks found: {}; identified: {}", report.checks.len(), if ids.is_empty() { "-".into() } else { ids.join(", ") });
    println!("N' per search run: {:?}", report.n_prime_history);
    for p in &report.phases {
        println!("phase {} ({}): N' = {}, {:.2} s", p.phase, p.name, p.n_prime, p.wall_seconds);
    }
    for d in &report.diagnostics {
        println!("note: {d}");
    }
    println!(
        "resolved {}/{} with encoder {}",
        report.resolved(),
        report.block_len,
        report.encoder.as_ref().map_or("-".into(), |e| e.to_string())
    );
    if let Some(m) = report.planted_match {
        println!("planted permutation {}", if m { "recovered" } else { "not recovered" });
    }
    Ok(if report.success { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn suite(ctx: &Ctx, a: SuiteArgs) -> Result<ExitCode> {
    let configs = match (&a.configs, a.table) {
        (Some(p), _) => {
            let mut cs: Vec<ExperimentConfig> = serde_json::from_str(&fs::read_to_string(p)?)?;
            if let Some(s) = ctx.seed_flag {
                cs.iter_mut().enumerate().for_each(|(i, c)| c.seed = seed::derive(s, i as u64));
            }
            cs
        }
        (None, true) => table_configs(a.long, ctx.seed),
        (None, false) => bail!("pass --configs <file> or --table"),
    };
    let rows = run_experiment_suite(&configs);
    let mut csv = String::from(SuiteRow::CSV_HEADER) + "\n";
    for r in &rows {
        csv += &r.csv_row();
        csv.push('\n');
    }
    print!("{csv}");
    if let Some(p) = &a.out {
        write(p, &csv)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn predict(a: PredictArgs) -> Result<ExitCode> {
    let tau = match (a.tau, a.sigma) {
        (Some(t), _) => t,
        (None, Some(s)) => tau_from_sigma(s)?,
        (None, None) => bail!("pass --tau or --sigma"),
    };
    let w_total = match (a.w_total, &a.encoder) {
        (Some(w), _) => w,
        (None, Some(enc)) => total_w0(&enumerate_dualwords(enc, a.weight, 32), a.weight),
        (None, None) => total_w0(&enumerate_dualwords(&default_encoder(), a.weight, 32), a.weight),
    };
    for runs in 1..=a.runs.max(1) {
        let c = predict_coverage(a.n, tau, a.weight, w_total, runs, a.ell);
        if runs == 1 {
            println!("ell = {}, P_w = {:.6}, W = {}", c.ell, c.p_w, c.w_total);
        }
        println!("runs {runs}: N' = {:.1}", c.n_prime);
    }
    Ok(ExitCode::SUCCESS)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
