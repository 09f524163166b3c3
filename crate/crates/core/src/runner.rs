//! Single optimization trials and the diagnostics computed from them.
//!
//! A trial draws `s_1, ..., s_T` from one [`RngStream`], steps the optimizer,
//! projects onto the problem's box when it has one, and keeps full-resolution
//! running sums of everything the rate bound needs. Per-step statistics are
//! additionally retained when `record_every == 1`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::optim::{HyperParams, Method, OptimizerState};
use crate::problem::{ProblemConstants, StochasticProblem};
use crate::rng::RngStream;
use crate::schedule::Schedule;
use crate::vector::Vector;

#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub method: Method,
    pub hp: HyperParams,
    pub steps: u64,
    pub w1: Vector,
    pub seed: u64,
    /// Stride of logged trajectory rows. `1` also keeps the per-step trace.
    pub record_every: u64,
    /// Status is `Converged` when the mean squared gradient norm over the final
    /// tenth of the run falls below this.
    pub tolerance: Option<f64>,
    /// Evaluate `‖∇f(w_t)‖²` with the full gradient. When off, or when the
    /// problem has none, the sampled gradient stands in.
    pub full_grad_metric: bool,
}

impl TrialConfig {
    pub fn new(method: Method, hp: HyperParams, steps: u64, w1: Vector, seed: u64) -> Self {
        Self {
            method,
            hp,
            steps,
            w1,
            seed,
            record_every: 1,
            tolerance: None,
            full_grad_metric: true,
        }
    }

    pub fn with_record_every(mut self, record_every: u64) -> Self {
        self.record_every = record_every;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = Some(tolerance);
        self
    }

    pub fn with_full_grad_metric(mut self, on: bool) -> Self {
        self.full_grad_metric = on;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialStatus {
    Converged,
    Finished,
    Diverged,
}

impl TrialStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TrialStatus::Converged => "converged",
            TrialStatus::Finished => "finished",
            TrialStatus::Diverged => "diverged",
        }
    }
}

/// Statistics of one step `t`, evaluated at the iterate `w_t` the step started from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub w_mean: f64,
    pub grad_norm_sq: f64,
    pub alpha: f64,
    pub alpha_eff: f64,
    pub eta_min: f64,
    pub eta_max: f64,
    pub eta_l2: f64,
}

/// A logged row: prefix averages up to `t` plus the rates of step `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: u64,
    pub w_mean: f64,
    pub grad_norm_sq_mean: f64,
    pub alpha: f64,
    pub eta_min: f64,
    pub eta_l2: f64,
    pub alpha_eff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub method: Method,
    pub hp: HyperParams,
    pub dim: usize,
    pub steps_planned: u64,
    pub steps_done: u64,
    pub record_every: u64,
    pub status: TrialStatus,
    /// Set when the gradient-norm metric came from sampled gradients.
    pub grad_metric_estimated: bool,
    pub rows: Vec<TrajectoryRow>,
    pub trace: Option<Vec<StepStats>>,
    sum_w: f64,
    sum_grad_sq: f64,
    tail_from: u64,
    tail_sum: f64,
    tail_count: u64,
    /// `Σ α_eff,t · min_i η_t,i`
    z: f64,
    /// `Σ α_eff,t · min_i η_t,i · ‖∇f(w_t)‖²`
    sum_z_grad_sq: f64,
    sum_alpha: f64,
    sum_alpha_grad_sq: f64,
    sum_alpha_sq: f64,
    /// `Σ α_eff,t² ‖η_t‖²`
    sum_alpha_eta_sq: f64,
    /// `max_t α_eff,t · max_i η_t,i`
    max_alpha_eta: f64,
    eta_min_seen: f64,
    eta_max_seen: f64,
}

impl TrialRecord {
    fn new(cfg: &TrialConfig) -> Self {
        let tail_len = (cfg.steps / 10).max(1);
        Self {
            method: cfg.method,
            hp: cfg.hp,
            dim: cfg.w1.len(),
            steps_planned: cfg.steps,
            steps_done: 0,
            record_every: cfg.record_every,
            status: TrialStatus::Finished,
            grad_metric_estimated: false,
            rows: Vec::new(),
            trace: (cfg.record_every == 1).then(Vec::new),
            sum_w: 0.0,
            sum_grad_sq: 0.0,
            tail_from: cfg.steps - tail_len + 1,
            tail_sum: 0.0,
            tail_count: 0,
            z: 0.0,
            sum_z_grad_sq: 0.0,
            sum_alpha: 0.0,
            sum_alpha_grad_sq: 0.0,
            sum_alpha_sq: 0.0,
            sum_alpha_eta_sq: 0.0,
            max_alpha_eta: 0.0,
            eta_min_seen: f64::INFINITY,
            eta_max_seen: 0.0,
        }
    }

    fn push(&mut self, t: u64, s: StepStats) {
        self.steps_done = t;
        self.sum_w += s.w_mean;
        self.sum_grad_sq += s.grad_norm_sq;
        if t >= self.tail_from {
            self.tail_sum += s.grad_norm_sq;
            self.tail_count += 1;
        }
        let weight = s.alpha_eff * s.eta_min;
        self.z += weight;
        self.sum_z_grad_sq += weight * s.grad_norm_sq;
        self.sum_alpha += s.alpha_eff;
        self.sum_alpha_grad_sq += s.alpha_eff * s.grad_norm_sq;
        self.sum_alpha_sq += s.alpha_eff * s.alpha_eff;
        self.sum_alpha_eta_sq += s.alpha_eff * s.alpha_eff * s.eta_l2 * s.eta_l2;
        self.max_alpha_eta = self.max_alpha_eta.max(s.alpha_eff * s.eta_max);
        self.eta_min_seen = self.eta_min_seen.min(s.eta_min);
        self.eta_max_seen = self.eta_max_seen.max(s.eta_max);
        if let Some(trace) = &mut self.trace {
            trace.push(s);
        }
        if t.is_multiple_of(self.record_every) || t == self.steps_planned {
            self.rows.push(TrajectoryRow {
                t,
                w_mean: self.prefix_w_mean(),
                grad_norm_sq_mean: self.prefix_grad_norm_sq_mean(),
                alpha: s.alpha,
                eta_min: s.eta_min,
                eta_l2: s.eta_l2,
                alpha_eff: s.alpha_eff,
            });
        }
    }

    /// Mean over completed steps of the coordinate-mean of `w_t`.
    pub fn prefix_w_mean(&self) -> f64 {
        self.sum_w / self.steps_done.max(1) as f64
    }

    /// Mean over completed steps of `‖∇f(w_t)‖²`.
    pub fn prefix_grad_norm_sq_mean(&self) -> f64 {
        self.sum_grad_sq / self.steps_done.max(1) as f64
    }

    /// Mean of `‖∇f(w_t)‖²` over the final tenth of the planned steps.
    pub fn tail_grad_norm_sq_mean(&self) -> Option<f64> {
        (self.tail_count > 0).then(|| self.tail_sum / self.tail_count as f64)
    }

    /// `Z = Σ_t α_eff,t · min_i η_t,i`.
    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn eta_range(&self) -> (f64, f64) {
        (self.eta_min_seen, self.eta_max_seen)
    }

    pub fn summary_line(&self) -> String {
        format!(
            "status={} final_grad_norm_sq_mean={:e} Z={:e}",
            self.status.as_str(),
            self.prefix_grad_norm_sq_mean(),
            self.z
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub record: TrialRecord,
    pub final_w: Vector,
    pub state: OptimizerState,
}

pub fn run_trial<P: StochasticProblem + ?Sized>(cfg: &TrialConfig, problem: &P) -> Result<TrialOutcome> {
    if cfg.w1.len() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            got: cfg.w1.len(),
        });
    }
    if cfg.steps == 0 {
        return Err(Error::InvalidHyperParam("trial needs at least one step".into()));
    }
    if cfg.record_every == 0 {
        return Err(Error::InvalidHyperParam("record_every must be >= 1".into()));
    }
    cfg.hp.validate()?;

    let domain = problem.domain();
    let mut rng = RngStream::new(cfg.seed);
    let mut state = OptimizerState::new(cfg.method, problem.dim())?;
    let mut w = domain.project(&cfg.w1)?;
    let mut record = TrialRecord::new(cfg);

    for t in 1..=cfg.steps {
        let token = problem.sample(&mut rng);
        let g = problem.grad(&w, &token)?;
        let full = if cfg.full_grad_metric {
            problem.full_grad(&w)
        } else {
            Err(Error::Unavailable("full gradient"))
        };
        let grad_norm_sq = match full {
            Ok(full) => full.squared_l2_norm(),
            Err(Error::Unavailable(_)) => {
                record.grad_metric_estimated = true;
                g.squared_l2_norm()
            }
            Err(e) => return Err(e),
        };
        let w_mean = w.mean();
        let report = match state.step(&cfg.hp, &mut w, &g) {
            Ok(r) => r,
            Err(Error::Diverged { .. }) => {
                record.status = TrialStatus::Diverged;
                break;
            }
            Err(e) => return Err(e),
        };
        if !grad_norm_sq.is_finite() {
            record.status = TrialStatus::Diverged;
            break;
        }
        w = domain.project(&w)?;
        record.push(
            t,
            StepStats {
                w_mean,
                grad_norm_sq,
                alpha: report.alpha,
                alpha_eff: report.alpha_eff,
                eta_min: report.eta_min,
                eta_max: report.eta_max,
                eta_l2: report.eta_l2,
            },
        );
    }

    if record.status != TrialStatus::Diverged {
        if let (Some(tol), Some(tail)) = (cfg.tolerance, record.tail_grad_norm_sq_mean()) {
            if tail <= tol {
                record.status = TrialStatus::Converged;
            }
        }
    }
    Ok(TrialOutcome {
        record,
        final_w: w,
        state,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    /// `p(t) ∝ α_eff,t · min_i η_t,i`.
    RateWeighted,
    Uniform,
}

/// Distribution over completed steps from which the guarantee samples its iterate.
pub fn iterate_distribution(record: &TrialRecord, weighting: Weighting) -> Result<Vec<f64>> {
    if record.status == TrialStatus::Diverged {
        return Err(Error::InvalidRecord("trial diverged".into()));
    }
    let trace = record
        .trace
        .as_ref()
        .ok_or_else(|| Error::InvalidRecord("per-step trace requires record_every = 1".into()))?;
    if trace.is_empty() {
        return Err(Error::InvalidRecord("no completed steps".into()));
    }
    match weighting {
        Weighting::Uniform => Ok(alloc::vec![1.0 / trace.len() as f64; trace.len()]),
        Weighting::RateWeighted => {
            normalize_weights(&trace.iter().map(|s| s.alpha_eff * s.eta_min).collect::<Vec<_>>())
        }
    }
}

/// Scales non-negative weights to sum to one.
pub fn normalize_weights(raw: &[f64]) -> Result<Vec<f64>> {
    if raw.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidRecord("weights must be finite and non-negative".into()));
    }
    let z: f64 = raw.iter().sum();
    if !(z > 0.0) {
        return Err(Error::InvalidRecord(format!("normalizer Z = {z} is not positive")));
    }
    Ok(raw.iter().map(|x| x / z).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundVariant {
    /// Realized-rate bound with `p(t) ∝ α_t min_i η_t,i`; assumes `β₁ = 0`.
    Conditional,
    /// Worst-case-rate bound with `H = 1/ε`, `L = 1/(G₂ + ε)`; assumes `β₁ = 0`.
    Unconditional,
    /// Realized-rate bound for `β₁,t = β₁/√t`.
    Momentum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub variant: BoundVariant,
    /// Weighted mean of `‖∇f(w_t)‖²` under the variant's iterate distribution.
    pub lhs: f64,
    pub rhs: f64,
    pub constants: ProblemConstants,
    pub steps: u64,
}

impl BoundReport {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

/// The `α_t` that corresponds to `γ_t = 1` for a horizon of `steps`:
/// `sqrt(2D / (T M G∞²))`.
pub fn unit_gamma_alpha(constants: &ProblemConstants, steps: u64) -> f64 {
    libm::sqrt(2.0 * constants.d_gap / (steps as f64 * constants.m * constants.g_inf * constants.g_inf))
}

/// Evaluates both sides of the non-convex rate bound on a finished trial.
///
/// `γ_t` is read off the realized global multiplier as `α_eff,t / unit_gamma_alpha`;
/// for AvaGrad run at `α = unit_gamma_alpha` this is exactly `sqrt(d) / ‖η_t‖`.
pub fn eval_bound(record: &TrialRecord, constants: &ProblemConstants, variant: BoundVariant) -> Result<BoundReport> {
    if record.status == TrialStatus::Diverged {
        return Err(Error::InvalidRecord("trial diverged".into()));
    }
    if record.steps_done == 0 {
        return Err(Error::InvalidRecord("no completed steps".into()));
    }
    let ProblemConstants { m, d_gap, g_inf, g_2 } = *constants;
    if !(m > 0.0 && d_gap > 0.0 && g_inf > 0.0 && g_2 >= 0.0) {
        return Err(Error::InvalidRecord(format!("bound constants must be positive: {constants:?}")));
    }
    let momentum_free = record.method == Method::Sgd || record.hp.beta1.is_zero();
    let beta1 = match (variant, record.hp.beta1) {
        (BoundVariant::Conditional | BoundVariant::Unconditional, _) if !momentum_free => {
            return Err(Error::InvalidRecord(
                "momentum requires the momentum bound variant".into(),
            ))
        }
        (BoundVariant::Momentum, Schedule::InverseSqrt(b)) if !momentum_free => b,
        (BoundVariant::Momentum, _) if !momentum_free => {
            return Err(Error::InvalidRecord(
                "momentum bound assumes beta1_t = beta1 / sqrt(t)".into(),
            ))
        }
        _ => 0.0,
    };

    let t = record.steps_done as f64;
    let d = record.dim as f64;
    let scale = unit_gamma_alpha(constants, record.steps_done);
    let root = libm::sqrt(m * d_gap * g_inf * g_inf / (2.0 * t));
    // Σ γ_t² ‖η_t‖² and Σ γ_t L_t
    let gamma_eta_sq = record.sum_alpha_eta_sq / (scale * scale);
    let gamma_l = record.z / scale;

    let (lhs, rhs) = match variant {
        BoundVariant::Conditional => (
            record.sum_z_grad_sq / record.z,
            root * (t + gamma_eta_sq) / gamma_l,
        ),
        BoundVariant::Unconditional => {
            let (h, l) = if record.method.is_adaptive() {
                (1.0 / record.hp.epsilon, 1.0 / (g_2 + record.hp.epsilon))
            } else {
                (1.0, 1.0)
            };
            let gamma_sq = record.sum_alpha_sq / (scale * scale);
            let gamma_sum = record.sum_alpha / scale;
            (
                record.sum_alpha_grad_sq / record.sum_alpha,
                root * (t + gamma_sq * d * h * h) / (l * gamma_sum),
            )
        }
        BoundVariant::Momentum => {
            let max_gamma_h = record.max_alpha_eta / scale;
            let drift = 2.0 * t * beta1 * libm::sqrt(2.0 * d * g_2 * g_2 / (m * d_gap)) * max_gamma_h;
            (
                record.sum_z_grad_sq / record.z,
                root / (1.0 - beta1) * (drift + t + gamma_eta_sq) / gamma_l,
            )
        }
    };
    if !lhs.is_finite() || !rhs.is_finite() {
        return Err(Error::InvalidRecord(format!("non-finite bound sides: lhs={lhs}, rhs={rhs}")));
    }
    Ok(BoundReport {
        variant,
        lhs,
        rhs,
        constants: *constants,
        steps: record.steps_done,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiasMode {
    /// Rate built from `v_t`, which already contains the current sample.
    Adam,
    /// Rate built from `v_{t-1}`.
    Delayed,
}

/// `E_s[η_t ⊙ g_t] - η̃_t ⊙ ∇f(w_t)` by exact enumeration of the outcomes,
/// where `η̃_t = 1 / (sqrt(v_{t-1}) + ε)`.
///
/// `state` supplies `v_{t-1}` and the step counter. When every outcome yields
/// the same rate the expectation factors as `η ⊙ E[g]`, so the delayed mode
/// returns exactly zero.
pub fn bias_gap<P: StochasticProblem + ?Sized>(
    problem: &P,
    w: &Vector,
    state: &OptimizerState,
    hp: &HyperParams,
    mode: BiasMode,
) -> Result<Vector> {
    let outcomes = problem
        .outcomes()
        .ok_or(Error::Unavailable("outcome enumeration"))?;
    if w.len() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.dim(),
            got: w.len(),
        });
    }
    hp.validate()?;
    let beta2 = hp.beta2.eval(state.t() + 1)?;
    let eps = hp.epsilon;
    let v_prev = state.v().as_slice();
    let delayed: Vec<f64> = v_prev.iter().map(|&v| 1.0 / (libm::sqrt(v) + eps)).collect();

    let mut rates = Vec::with_capacity(outcomes.len());
    let mut grads = Vec::with_capacity(outcomes.len());
    for (_, token) in &outcomes {
        let g = problem.grad(w, token)?;
        let eta: Vec<f64> = match mode {
            BiasMode::Delayed => delayed.clone(),
            BiasMode::Adam => v_prev
                .iter()
                .zip(g.iter())
                .map(|(&v, &gi)| 1.0 / (libm::sqrt(beta2 * v + (1.0 - beta2) * gi * gi) + eps))
                .collect(),
        };
        rates.push(eta);
        grads.push(g);
    }

    let d = w.len();
    let mut mean_grad = alloc::vec![0.0; d];
    for ((p, _), g) in outcomes.iter().zip(&grads) {
        for (acc, &gi) in mean_grad.iter_mut().zip(g.iter()) {
            *acc += p * gi;
        }
    }
    let shared_rate = rates.windows(2).all(|pair| pair[0] == pair[1]);
    let expected: Vec<f64> = if shared_rate {
        rates[0].iter().zip(&mean_grad).map(|(e, g)| e * g).collect()
    } else {
        let mut acc = alloc::vec![0.0; d];
        for (((p, _), g), eta) in outcomes.iter().zip(&grads).zip(&rates) {
            for i in 0..d {
                acc[i] += p * eta[i] * g[i];
            }
        }
        acc
    };
    Vector::new(
        expected
            .iter()
            .zip(delayed.iter().zip(&mean_grad))
            .map(|(e, (r, g))| e - r * g)
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{QuadraticProblem, SynthProblem};
    use approx::assert_relative_eq;

    fn synth() -> SynthProblem {
        SynthProblem::new(999.0, 1.0).unwrap()
    }

    fn w(x: f64) -> Vector {
        Vector::from_slice(&[x]).unwrap()
    }

    #[test]
    fn single_step_record() {
        let cfg = TrialConfig::new(Method::Adam, HyperParams::constant(1e-3, 1e-8, 0.0, 0.99), 1, w(0.5), 3);
        let out = run_trial(&cfg, &synth()).unwrap();
        let r = &out.record;
        assert_eq!(r.steps_done, 1);
        assert_eq!(r.trace.as_ref().unwrap().len(), 1);
        let g = synth().params().grad_f(0.5);
        assert_eq!(r.prefix_grad_norm_sq_mean(), g * g);
        assert_eq!(r.prefix_w_mean(), 0.5);
        assert_eq!(r.rows.len(), 1);
    }

    #[test]
    fn clamped_iterates_stay_in_box() {
        let cfg = TrialConfig::new(Method::DelayedAdam, HyperParams::constant(1e-3, 1e-8, 0.0, 0.99), 2000, w(0.5), 1);
        let out = run_trial(&cfg, &synth()).unwrap();
        assert!(out.record.trace.unwrap().iter().all(|s| (0.0..=1.0).contains(&s.w_mean)));
        assert!((0.0..=1.0).contains(&out.final_w[0]));
    }

    #[test]
    fn stride_rows_include_final_step() {
        let cfg = TrialConfig::new(Method::Sgd, HyperParams::constant(1e-3, 1e-8, 0.0, 0.99), 95, w(0.5), 1)
            .with_record_every(10);
        let out = run_trial(&cfg, &synth()).unwrap();
        let ts: Vec<u64> = out.record.rows.iter().map(|r| r.t).collect();
        assert_eq!(ts, vec![10, 20, 30, 40, 50, 60, 70, 80, 90, 95]);
        assert!(out.record.trace.is_none());
        assert!(iterate_distribution(&out.record, Weighting::Uniform).is_err());
    }

    #[test]
    fn divergence_is_recorded() {
        let q = QuadraticProblem::new(Vector::from_slice(&[1.0]).unwrap(), w(0.0), 0.0).unwrap();
        let cfg = TrialConfig::new(Method::Sgd, HyperParams::constant(5000.0, 1e-8, 0.0, 0.9), 1000, w(1.0), 0);
        let out = run_trial(&cfg, &q).unwrap();
        assert_eq!(out.record.status, TrialStatus::Diverged);
        assert!(out.record.steps_done < 1000);
        assert!(out.record.summary_line().starts_with("status=diverged"));
        assert!(eval_bound(
            &out.record,
            &ProblemConstants { m: 1.0, d_gap: 1.0, g_inf: 1.0, g_2: 1.0 },
            BoundVariant::Unconditional
        )
        .is_err());
    }

    #[test]
    fn converged_status_with_tolerance() {
        let q = QuadraticProblem::new(Vector::from_slice(&[1.0]).unwrap(), w(0.0), 0.0).unwrap();
        let cfg = TrialConfig::new(Method::Sgd, HyperParams::constant(0.1, 1e-8, 0.0, 0.9), 500, w(1.0), 0)
            .with_tolerance(1e-12);
        assert_eq!(run_trial(&cfg, &q).unwrap().record.status, TrialStatus::Converged);
    }

    #[test]
    fn config_errors() {
        let hp = HyperParams::constant(0.1, 1e-8, 0.0, 0.9);
        let bad_dim = TrialConfig::new(Method::Sgd, hp, 5, Vector::zeros(2).unwrap(), 0);
        assert!(matches!(run_trial(&bad_dim, &synth()), Err(Error::DimensionMismatch { .. })));
        let zero_steps = TrialConfig::new(Method::Sgd, hp, 0, w(0.5), 0);
        assert!(run_trial(&zero_steps, &synth()).is_err());
    }

    #[test]
    fn sgd_weights_are_uniform() {
        let cfg = TrialConfig::new(Method::Sgd, HyperParams::constant(1e-3, 1e-8, 0.0, 0.9), 4, w(0.5), 9);
        let rec = run_trial(&cfg, &synth()).unwrap().record;
        assert_eq!(iterate_distribution(&rec, Weighting::RateWeighted).unwrap(), vec![0.25; 4]);
    }

    #[test]
    fn weights_normalize() {
        assert_eq!(normalize_weights(&[1.0, 3.0]).unwrap(), vec![0.25, 0.75]);
        assert!(normalize_weights(&[0.0, 0.0]).is_err());
        assert!(normalize_weights(&[-1.0, 2.0]).is_err());
    }

    #[test]
    fn bias_gap_delayed_is_zero_and_adam_pushes_up() {
        let prob = synth();
        let hp = HyperParams::constant(1e-5, 1e-8, 0.0, 0.99);
        let st = OptimizerState::from_parts(Method::Adam, w(0.0), w(1e-3), 10).unwrap();
        let delayed = bias_gap(&prob, &w(0.5), &st, &hp, BiasMode::Delayed).unwrap();
        assert_eq!(delayed[0], 0.0);
        let adam = bias_gap(&prob, &w(0.5), &st, &hp, BiasMode::Adam).unwrap();
        // The expected Adam step -alpha * E[eta g] exceeds the unbiased one: drift toward w = 1.
        assert!(adam[0] < -1e-9, "gap {}", adam[0]);
    }

    #[test]
    fn bias_gap_vanishes_as_beta2_approaches_one() {
        let prob = synth();
        let st = OptimizerState::from_parts(Method::Adam, w(0.0), w(4.0), 10).unwrap();
        let gap = |b2: f64| {
            let hp = HyperParams::constant(1e-5, 1e-8, 0.0, b2);
            bias_gap(&prob, &w(0.5), &st, &hp, BiasMode::Adam).unwrap()[0].abs()
        };
        let coarse = gap(0.99);
        let mid = gap(1.0 - 1e-6);
        let fine = gap(1.0 - 1e-10);
        assert!(mid < coarse && fine < mid);
        assert!(fine < 1e-4 * coarse, "{fine} vs {coarse}");
    }

    #[test]
    fn bias_gap_needs_finite_outcomes() {
        let q = QuadraticProblem::new(Vector::from_slice(&[1.0]).unwrap(), w(0.0), 0.1).unwrap();
        let st = OptimizerState::new(Method::Adam, 1).unwrap();
        let hp = HyperParams::constant(1e-5, 1e-8, 0.0, 0.99);
        assert_eq!(
            bias_gap(&q, &w(0.5), &st, &hp, BiasMode::Adam),
            Err(Error::Unavailable("outcome enumeration"))
        );
    }

    #[test]
    fn momentum_rejected_by_conditional_bound() {
        let mut hp = HyperParams::constant(1e-5, 1e-8, 0.9, 0.99);
        let cfg = TrialConfig::new(Method::DelayedAdam, hp, 50, w(0.5), 2);
        let rec = run_trial(&cfg, &synth()).unwrap().record;
        let k = synth().constants(&w(0.6)).unwrap();
        assert!(eval_bound(&rec, &k, BoundVariant::Conditional).is_err());
        assert!(eval_bound(&rec, &k, BoundVariant::Momentum).is_err());
        hp.beta1 = Schedule::InverseSqrt(0.9);
        let cfg = TrialConfig::new(Method::DelayedAdam, hp, 50, w(0.5), 2);
        let rec = run_trial(&cfg, &synth()).unwrap().record;
        let b = eval_bound(&rec, &k, BoundVariant::Momentum).unwrap();
        assert!(b.rhs.is_finite() && b.lhs.is_finite());
    }

    #[test]
    fn avagrad_one_dimensional_conditional_bound() {
        let prob = synth();
        let w1 = w(0.9);
        let k = prob.constants(&w1).unwrap();
        let steps = 1000;
        let alpha = unit_gamma_alpha(&k, steps);
        let cfg = TrialConfig::new(Method::AvaGrad, HyperParams::constant(alpha, 1e-8, 0.0, 0.99), steps, w1, 4);
        let rec = run_trial(&cfg, &prob).unwrap().record;
        let b = eval_bound(&rec, &k, BoundVariant::Conditional).unwrap();
        let root = (k.m * k.d_gap * k.g_inf * k.g_inf / (2.0 * steps as f64)).sqrt();
        assert_relative_eq!(b.rhs, 2.0 * root, max_relative = 1e-12);
    }
}
