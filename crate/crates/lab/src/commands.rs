//! The four subcommands. Each writes human-readable `key=value` lines to `log`
//! and artifacts under the configured output directory.

use std::io::Write;
use std::path::{Path, PathBuf};

use avagrad_core::problem::{fd_check, SynthProblem};
use avagrad_core::rng::mix;
use avagrad_core::runner::{
    bias_gap, eval_bound, run_trial, BiasMode, BoundVariant, TrialConfig, TrialRecord, TrialStatus,
};
use avagrad_core::sweep::replicate_init_seed;
use avagrad_core::{Domain, HyperParams, Method, RngStream, Schedule, StochasticProblem, Vector};
use rayon::prelude::*;

use crate::config::{build_problem, BuiltProblem, Config, LoadedConfig, Overrides};
use crate::error::{LabError, LabResult};
use crate::export::{export_columns, export_heatmap, export_separability, export_trajectory};
use crate::sweep::{pool, run_sweep, separability_summary};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// A trial diverged or a check missed its threshold.
    Failure,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::Failure => 2,
        }
    }
}

fn out_line(log: &mut dyn Write, line: std::fmt::Arguments<'_>) -> LabResult<()> {
    log.write_fmt(line)
        .and_then(|_| log.write_all(b"\n"))
        .map_err(|e| LabError::io("<output>", e))
}

macro_rules! say {
    ($log:expr, $($arg:tt)*) => { out_line($log, format_args!($($arg)*))? };
}

fn prepare(loaded: LoadedConfig, overrides: &Overrides) -> LabResult<(Config, BuiltProblem)> {
    let LoadedConfig { mut config, base_dir } = loaded;
    config.apply(overrides);
    config.validate_run()?;
    let built = build_problem(&config.problem, &base_dir)?;
    Ok((config, built))
}

fn start_point(built: &BuiltProblem, base_seed: u64, replicate: u64) -> Vector {
    match &built.w1 {
        Some(w) => w.clone(),
        None => built
            .problem
            .initial_point(&mut RngStream::new(replicate_init_seed(base_seed, replicate))),
    }
}

fn trial_config(config: &Config, built: &BuiltProblem, replicate: u64) -> LabResult<TrialConfig> {
    let base = config.base_seed();
    let mut cfg = TrialConfig::new(
        config.optimizer.method()?,
        config.optimizer.hyperparams()?,
        config.run.steps,
        start_point(built, base, replicate),
        mix(base, replicate),
    )
    .with_record_every(config.run.record_every);
    cfg.tolerance = config.run.tolerance;
    Ok(cfg)
}

fn header(config: &Config, kind: &str) -> LabResult<String> {
    let o = &config.optimizer;
    Ok(format!(
        "# problem={kind} method={} alpha={} epsilon={} beta1={} beta2={} weight_decay={} decay_mode={} steps={} seed={} replicates={}",
        config.optimizer.method()?,
        o.alpha,
        o.epsilon,
        o.beta1,
        o.beta2,
        o.weight_decay,
        o.decay_mode,
        config.run.steps,
        config.base_seed(),
        config.run.replicates,
    ))
}

/// One trial per replicate; trajectories go to `<out>/trajectory_<method>_<replicate>.csv`.
pub fn cmd_run(loaded: LoadedConfig, overrides: &Overrides, log: &mut dyn Write) -> LabResult<Outcome> {
    let (config, built) = prepare(loaded, overrides)?;
    let method = config.optimizer.method()?;
    say!(log, "{}", header(&config, built.kind)?);
    let mut outcome = Outcome::Success;
    for r in 0..config.run.replicates {
        let cfg = trial_config(&config, &built, r)?;
        let trial = run_trial(&cfg, built.problem.as_ref())?;
        let path = config.run.out.join(format!("trajectory_{}_{r}.csv", method.name()));
        export_trajectory(&trial.record, &path)?;
        say!(log, "{}", trial.record.summary_line());
        if trial.record.status == TrialStatus::Diverged {
            outcome = Outcome::Failure;
        }
    }
    Ok(outcome)
}

pub const SYNTH_METHODS: [Method; 3] = [Method::Adam, Method::AmsGrad, Method::DelayedAdam];

/// Seed-averaged curves for the synthetic problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthFigure {
    pub ts: Vec<u64>,
    pub methods: Vec<Method>,
    /// Per method: prefix mean of `w_t` at each `t`.
    pub w_mean: Vec<Vec<f64>>,
    /// Per method: prefix mean of `‖∇f(w_t)‖²` at each `t`.
    pub grad_norm_sq_mean: Vec<Vec<f64>>,
    /// Per method: mean over the final tenth of the steps.
    pub tail_grad_norm_sq_mean: Vec<f64>,
}

pub fn synth_hyperparams() -> HyperParams {
    HyperParams::constant(1e-5, 1e-8, 0.0, 0.99)
}

/// Runs Adam, AMSGrad and delayed Adam from `w = 0.5`. Replicate `r` uses the
/// same sample sequence for every method.
pub fn synth_figure(steps: u64, replicates: u64, base_seed: u64, workers: usize) -> LabResult<SynthFigure> {
    if steps == 0 || replicates == 0 {
        return Err(LabError::Config("synthfig needs steps >= 1 and seeds >= 1".into()));
    }
    let problem = SynthProblem::new(999.0, 1.0)?;
    let stride = (steps / 1000).max(1);
    let jobs: Vec<(usize, u64)> = (0..SYNTH_METHODS.len())
        .flat_map(|m| (0..replicates).map(move |r| (m, r)))
        .collect();
    let records: Vec<TrialRecord> = pool(workers)?.install(|| {
        jobs.par_iter()
            .map(|&(m, r)| {
                let cfg = TrialConfig::new(
                    SYNTH_METHODS[m],
                    synth_hyperparams(),
                    steps,
                    Vector::from_slice(&[0.5])?,
                    mix(base_seed, r),
                )
                .with_record_every(stride);
                Ok(run_trial(&cfg, &problem)?.record)
            })
            .collect::<LabResult<Vec<_>>>()
    })?;
    if let Some(bad) = records.iter().find(|r| r.status == TrialStatus::Diverged) {
        return Err(avagrad_core::Error::Diverged { step: bad.steps_done + 1 }.into());
    }
    let ts: Vec<u64> = records[0].rows.iter().map(|r| r.t).collect();
    let n = replicates as f64;
    let mut fig = SynthFigure {
        ts,
        methods: SYNTH_METHODS.to_vec(),
        w_mean: Vec::new(),
        grad_norm_sq_mean: Vec::new(),
        tail_grad_norm_sq_mean: Vec::new(),
    };
    for (m, chunk) in records.chunks(replicates as usize).enumerate() {
        debug_assert_eq!(m, fig.w_mean.len());
        let mut w = vec![0.0; fig.ts.len()];
        let mut g = vec![0.0; fig.ts.len()];
        let mut tail = 0.0;
        for rec in chunk {
            for (i, row) in rec.rows.iter().enumerate() {
                w[i] += row.w_mean / n;
                g[i] += row.grad_norm_sq_mean / n;
            }
            tail += rec.tail_grad_norm_sq_mean().unwrap_or(f64::NAN) / n;
        }
        fig.w_mean.push(w);
        fig.grad_norm_sq_mean.push(g);
        fig.tail_grad_norm_sq_mean.push(tail);
    }
    Ok(fig)
}

pub fn cmd_synthfig(
    out: &Path,
    steps: u64,
    replicates: u64,
    base_seed: u64,
    workers: usize,
    log: &mut dyn Write,
) -> LabResult<Outcome> {
    let fig = synth_figure(steps, replicates, base_seed, workers)?;
    let names: Vec<&str> = fig.methods.iter().map(|m| m.name()).collect();
    export_columns(&out.join("fig1_left.csv"), &names, &fig.ts, &fig.w_mean)?;
    export_columns(&out.join("fig1_right.csv"), &names, &fig.ts, &fig.grad_norm_sq_mean)?;
    say!(log, "# steps={steps} seeds={replicates} seed={base_seed}");
    for (i, m) in fig.methods.iter().enumerate() {
        say!(
            log,
            "method={m} w_mean={:e} grad_norm_sq_mean={:e} tail_grad_norm_sq_mean={:e}",
            fig.w_mean[i].last().copied().unwrap_or(f64::NAN),
            fig.grad_norm_sq_mean[i].last().copied().unwrap_or(f64::NAN),
            fig.tail_grad_norm_sq_mean[i],
        );
    }
    Ok(Outcome::Success)
}

/// Writes `<out>/heatmap.csv` and `<out>/separability.csv`.
pub fn cmd_sweep(
    loaded: LoadedConfig,
    overrides: &Overrides,
    workers: usize,
    log: &mut dyn Write,
) -> LabResult<Outcome> {
    let (config, built) = prepare(loaded, overrides)?;
    let spec = config.grid_spec(built.w1.clone())?;
    say!(log, "{} cells={}", header(&config, built.kind)?, spec.n_cells());
    let cells = run_sweep(&spec, built.problem.as_ref(), workers, true)?;
    export_heatmap(&cells, &config.run.out.join("heatmap.csv"))?;
    let summary = separability_summary(&spec, &cells);
    export_separability(&summary, &config.run.out.join("separability.csv"))?;
    for (m, s) in &summary {
        match s {
            Some(x) => say!(log, "method={m} separability_index={x}"),
            None => say!(log, "method={m} separability_index=undefined"),
        }
    }
    Ok(Outcome::Success)
}

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOLERANCE: f64 = 1e-5;
pub const DELAYED_BIAS_TOLERANCE: f64 = 1e-15;
const CHECK_STREAM: u64 = 0xc4ec;

/// Largest finite-difference error over the start point and four perturbations of it.
pub fn fd_max_error(problem: &dyn StochasticProblem, w1: &Vector, seed: u64) -> LabResult<f64> {
    let mut rng = RngStream::derive(seed, &[CHECK_STREAM]);
    let domain = problem.domain();
    let mut worst = 0.0f64;
    for k in 0..5 {
        let w = if k == 0 {
            w1.clone()
        } else {
            let shifted = Vector::new(w1.iter().map(|&x| x + 0.1 * rng.standard_normal()).collect())?;
            match domain {
                // Keep the central differences inside the box.
                Domain::Box { lo, hi } => shifted.clamp_box(lo + FD_STEP, hi - FD_STEP)?,
                Domain::Unconstrained => shifted,
            }
        };
        let token = problem.sample(&mut rng);
        worst = worst.max(fd_check(problem, &w, &token, FD_STEP)?);
    }
    Ok(worst)
}

/// Gradient check, bias diagnostic and rate bound for the configured problem and method.
pub fn cmd_check(loaded: LoadedConfig, overrides: &Overrides, log: &mut dyn Write) -> LabResult<Outcome> {
    let (config, built) = prepare(loaded, overrides)?;
    let problem = built.problem.as_ref();
    say!(log, "{}", header(&config, built.kind)?);
    let mut pass = true;

    let cfg = trial_config(&config, &built, 0)?;
    let fd = fd_max_error(problem, &cfg.w1, config.base_seed())?;
    pass &= fd <= FD_TOLERANCE;
    say!(log, "fd_max_rel_err={fd:.1e}");

    let trial = run_trial(&cfg, problem)?;
    say!(log, "{}", trial.record.summary_line());
    if trial.record.status == TrialStatus::Diverged {
        say!(log, "check=fail");
        return Ok(Outcome::Failure);
    }

    if problem.outcomes().is_some() {
        let hp = cfg.hp;
        let adam = bias_gap(problem, &trial.final_w, &trial.state, &hp, BiasMode::Adam)?;
        let delayed = bias_gap(problem, &trial.final_w, &trial.state, &hp, BiasMode::Delayed)?;
        let delayed_norm = delayed.norms().linf;
        pass &= delayed_norm <= DELAYED_BIAS_TOLERANCE;
        say!(log, "bias_gap_adam={:.1e}", adam.norms().linf);
        say!(log, "bias_gap_delayed={delayed_norm:.1e}");
    } else {
        say!(log, "bias_gap=unavailable");
    }

    match problem.constants(&cfg.w1) {
        Some(k) if k.d_gap > 0.0 => {
            let momentum_free = cfg.method == Method::Sgd || cfg.hp.beta1.is_zero();
            let variants: &[(BoundVariant, bool)] = if momentum_free {
                &[(BoundVariant::Unconditional, true), (BoundVariant::Conditional, false)]
            } else if matches!(cfg.hp.beta1, Schedule::InverseSqrt(_)) {
                &[(BoundVariant::Momentum, true)]
            } else {
                &[]
            };
            if variants.is_empty() {
                say!(log, "bound=skipped (needs beta1 = 0 or an inverse_sqrt beta1 schedule)");
            }
            for &(variant, asserted) in variants {
                let b = eval_bound(&trial.record, &k, variant)?;
                if asserted {
                    pass &= b.holds();
                }
                say!(
                    log,
                    "bound={} lhs={:e} rhs={:e} holds={} asserted={asserted}",
                    variant_name(variant),
                    b.lhs,
                    b.rhs,
                    b.holds()
                );
            }
        }
        _ => say!(log, "bound=unavailable"),
    }

    say!(log, "check={}", if pass { "pass" } else { "fail" });
    Ok(if pass { Outcome::Success } else { Outcome::Failure })
}

pub fn variant_name(v: BoundVariant) -> &'static str {
    match v {
        BoundVariant::Conditional => "conditional",
        BoundVariant::Unconditional => "unconditional",
        BoundVariant::Momentum => "momentum",
    }
}

/// Default output directory for commands run without a config.
pub fn default_out() -> PathBuf {
    PathBuf::from("out")
}
