//! First-order optimizers sharing the update
//!
//! ```text
//! w_{t+1} = w_t - alpha_t * eta_t ⊙ m_t
//! ```
//!
//! where `alpha_t` is the global learning rate, `eta_t` the parameter-wise
//! rates and `m_t` the momentum buffer. Methods differ only in how `eta_t` is
//! formed:
//!
//! | method          | `eta_t`                                   |
//! |-----------------|-------------------------------------------|
//! | SGD, momentum   | `1`                                       |
//! | Adam, AdamW     | `1 / (sqrt(v_t) + eps)`                   |
//! | AMSGrad         | `1 / (sqrt(max_{j<=t} v_j) + eps)`        |
//! | Delayed Adam    | `1 / (sqrt(v_{t-1}) + eps)`               |
//! | AvaGrad(W)      | delayed rate, rescaled by `sqrt(d)/‖eta‖` |
//!
//! Delayed methods read the second moment *before* folding in the current
//! gradient, so the rate used at step `t` never depends on the sample drawn at
//! step `t`. No bias correction is applied to either moment.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::schedule::Schedule;
use crate::vector::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Sgd,
    MomentumSgd,
    Adam,
    AmsGrad,
    AdamW,
    DelayedAdam,
    AvaGrad,
    AvaGradW,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Sgd,
        Method::MomentumSgd,
        Method::Adam,
        Method::AmsGrad,
        Method::AdamW,
        Method::DelayedAdam,
        Method::AvaGrad,
        Method::AvaGradW,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Sgd => "sgd",
            Method::MomentumSgd => "momentum_sgd",
            Method::Adam => "adam",
            Method::AmsGrad => "amsgrad",
            Method::AdamW => "adamw",
            Method::DelayedAdam => "delayed_adam",
            Method::AvaGrad => "avagrad",
            Method::AvaGradW => "avagradw",
        }
    }

    /// Whether the method keeps a second-moment estimate.
    pub fn is_adaptive(self) -> bool {
        !matches!(self, Method::Sgd | Method::MomentumSgd)
    }

    /// Whether `eta_t` is computed from `v_{t-1}`.
    pub fn is_delayed(self) -> bool {
        matches!(self, Method::DelayedAdam | Method::AvaGrad | Method::AvaGradW)
    }

    pub fn is_avagrad(self) -> bool {
        matches!(self, Method::AvaGrad | Method::AvaGradW)
    }

    fn forces_decoupled_decay(self) -> bool {
        matches!(self, Method::AdamW | Method::AvaGradW)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: alloc::string::String = s
            .trim()
            .chars()
            .filter(|c| *c != '_' && *c != '-')
            .map(|c| c.to_ascii_lowercase())
            .collect();
        Ok(match norm.as_str() {
            "sgd" => Method::Sgd,
            "momentumsgd" | "momentum" => Method::MomentumSgd,
            "adam" => Method::Adam,
            "amsgrad" => Method::AmsGrad,
            "adamw" => Method::AdamW,
            "delayedadam" => Method::DelayedAdam,
            "avagrad" => Method::AvaGrad,
            "avagradw" => Method::AvaGradW,
            _ => return Err(Error::InvalidHyperParam(format!("unknown method `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecayMode {
    #[default]
    None,
    /// Adds `lambda * w` to the gradient before the moments see it.
    CoupledL2,
    /// Subtracts `alpha_t * lambda * w` from the parameters after the step.
    Decoupled,
}

impl FromStr for DecayMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "none" => Ok(DecayMode::None),
            "coupled_l2" | "l2" => Ok(DecayMode::CoupledL2),
            "decoupled" => Ok(DecayMode::Decoupled),
            _ => Err(Error::InvalidHyperParam(format!("unknown decay mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub alpha: Schedule,
    pub epsilon: f64,
    pub beta1: Schedule,
    pub beta2: Schedule,
    pub weight_decay: f64,
    pub decay_mode: DecayMode,
}

impl HyperParams {
    /// Constant learning rate and constant moment decays, no weight decay.
    pub fn constant(alpha: f64, epsilon: f64, beta1: f64, beta2: f64) -> Self {
        Self {
            alpha: Schedule::Constant(alpha),
            epsilon,
            beta1: Schedule::Constant(beta1),
            beta2: Schedule::Constant(beta2),
            weight_decay: 0.0,
            decay_mode: DecayMode::None,
        }
    }

    pub fn with_weight_decay(mut self, weight_decay: f64, mode: DecayMode) -> Self {
        self.weight_decay = weight_decay;
        self.decay_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidHyperParam(format!(
                "epsilon must be positive and finite, got {}",
                self.epsilon
            )));
        }
        if !self.beta1.is_decay_rate() {
            return Err(Error::InvalidHyperParam(format!(
                "beta1 must lie in [0, 1), got {:?}",
                self.beta1
            )));
        }
        if !self.beta2.is_decay_rate() {
            return Err(Error::InvalidHyperParam(format!(
                "beta2 must lie in [0, 1), got {:?}",
                self.beta2
            )));
        }
        if !(self.weight_decay >= 0.0) || !self.weight_decay.is_finite() {
            return Err(Error::InvalidHyperParam(format!(
                "weight decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        Ok(())
    }

    fn effective_decay(&self, method: Method) -> (DecayMode, f64) {
        let mode = if method.forces_decoupled_decay() {
            DecayMode::Decoupled
        } else {
            self.decay_mode
        };
        match mode {
            DecayMode::None => (DecayMode::None, 0.0),
            m => (m, self.weight_decay),
        }
    }
}

/// What a single step actually applied.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    /// Parameter-wise rates `eta_t` (ones for the non-adaptive methods).
    pub eta: Vector,
    /// `alpha_t` from the schedule.
    pub alpha: f64,
    /// Global multiplier on `eta_t`: `alpha_t`, or `alpha_t * sqrt(d) / ‖eta_t‖` for AvaGrad.
    pub alpha_eff: f64,
    pub eta_min: f64,
    pub eta_max: f64,
    pub eta_l2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    method: Method,
    m: Vector,
    v: Vector,
    v_hat: Option<Vector>,
    t: u64,
}

impl OptimizerState {
    pub fn new(method: Method, dim: usize) -> Result<Self> {
        let zeros = Vector::zeros(dim)?;
        Ok(Self {
            method,
            m: zeros.clone(),
            v: zeros.clone(),
            v_hat: (method == Method::AmsGrad).then_some(zeros),
            t: 0,
        })
    }

    /// Rebuilds a state from raw buffers, e.g. to probe rates at a chosen `v`.
    pub fn from_parts(method: Method, m: Vector, v: Vector, t: u64) -> Result<Self> {
        if m.len() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: m.len(),
                got: v.len(),
            });
        }
        if let Some(i) = v.iter().position(|&x| x < 0.0) {
            return Err(Error::NegativeSqrt(i));
        }
        let v_hat = (method == Method::AmsGrad).then(|| v.clone());
        Ok(Self {
            method,
            m,
            v,
            v_hat,
            t,
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    pub fn m(&self) -> &Vector {
        &self.m
    }

    pub fn v(&self) -> &Vector {
        &self.v
    }

    pub fn v_hat(&self) -> Option<&Vector> {
        self.v_hat.as_ref()
    }

    /// Number of completed steps.
    pub fn t(&self) -> u64 {
        self.t
    }

    /// Performs step `t = self.t() + 1`, updating `w` and the buffers in place.
    ///
    /// On error nothing is modified. A non-finite buffer or iterate is reported
    /// as [`Error::Diverged`].
    pub fn step(&mut self, hp: &HyperParams, w: &mut Vector, g: &Vector) -> Result<StepReport> {
        let d = self.dim();
        for len in [w.len(), g.len()] {
            if len != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: len,
                });
            }
        }
        hp.validate()?;
        let t = self.t + 1;
        let alpha = hp.alpha.eval(t)?;
        let beta1 = hp.beta1.eval(t)?;
        let beta2 = hp.beta2.eval(t)?;
        let eps = hp.epsilon;
        let (decay, lambda) = hp.effective_decay(self.method);
        let method = self.method;
        let diverged = Error::Diverged { step: t };

        let w_old = w.as_slice();
        let grad: Vec<f64> = match decay {
            DecayMode::CoupledL2 => g.iter().zip(w_old).map(|(&gi, &wi)| gi + lambda * wi).collect(),
            _ => g.as_slice().to_vec(),
        };

        let m_new: Vec<f64> = match method {
            Method::Sgd => self.m.as_slice().to_vec(),
            _ => self
                .m
                .iter()
                .zip(&grad)
                .map(|(&mi, &gi)| beta1 * mi + (1.0 - beta1) * gi)
                .collect(),
        };
        let v_new: Vec<f64> = if method.is_adaptive() {
            self.v
                .iter()
                .zip(&grad)
                .map(|(&vi, &gi)| beta2 * vi + (1.0 - beta2) * gi * gi)
                .collect()
        } else {
            self.v.as_slice().to_vec()
        };
        let v_hat_new: Option<Vec<f64>> = self.v_hat.as_ref().map(|vh| {
            vh.iter().zip(&v_new).map(|(&a, &b)| a.max(b)).collect()
        });

        let eta: Vec<f64> = match method {
            Method::Sgd | Method::MomentumSgd => alloc::vec![1.0; d],
            Method::Adam | Method::AdamW => v_new.iter().map(|&vi| 1.0 / (libm::sqrt(vi) + eps)).collect(),
            Method::AmsGrad => v_hat_new
                .as_ref()
                .expect("AMSGrad state carries v_hat")
                .iter()
                .map(|&vi| 1.0 / (libm::sqrt(vi) + eps))
                .collect(),
            Method::DelayedAdam | Method::AvaGrad | Method::AvaGradW => {
                self.v.iter().map(|&vi| 1.0 / (libm::sqrt(vi) + eps)).collect()
            }
        };
        if eta.iter().any(|x| !x.is_finite()) {
            return Err(diverged);
        }
        let eta = Vector::from_raw(eta);
        let norms = eta.norms();

        // AvaGrad divides by the root-mean-square of eta; for d = 1 this is
        // eta / eta = 1 exactly.
        let (rate, alpha_eff) = if method.is_avagrad() {
            let rms = norms.l2 / libm::sqrt(d as f64);
            let rate: Vec<f64> = eta.iter().map(|&e| e / rms).collect();
            (rate, alpha / rms)
        } else {
            (eta.as_slice().to_vec(), alpha)
        };

        let step_dir = match method {
            Method::Sgd => &grad,
            _ => &m_new,
        };
        let w_new: Vec<f64> = w_old
            .iter()
            .zip(&rate)
            .zip(step_dir)
            .map(|((&wi, &ri), &mi)| {
                let stepped = wi - alpha * ri * mi;
                if decay == DecayMode::Decoupled {
                    stepped - alpha * lambda * wi
                } else {
                    stepped
                }
            })
            .collect();

        let all_finite = w_new.iter().chain(&m_new).chain(&v_new).all(|x| x.is_finite())
            && alpha_eff.is_finite();
        if !all_finite {
            return Err(diverged);
        }

        self.m = Vector::from_raw(m_new);
        self.v = Vector::from_raw(v_new);
        if let Some(vh) = v_hat_new {
            self.v_hat = Some(Vector::from_raw(vh));
        }
        self.t = t;
        *w = Vector::from_raw(w_new);

        Ok(StepReport {
            alpha,
            alpha_eff,
            eta_min: norms.min,
            eta_max: norms.max,
            eta_l2: norms.l2,
            eta,
        })
    }
}

/// Range of every delayed-Adam rate when stochastic gradients satisfy `‖g‖ <= g2`.
pub fn eta_bounds(hp: &HyperParams, g2: f64) -> Result<(f64, f64)> {
    if !(hp.epsilon > 0.0) {
        return Err(Error::InvalidHyperParam(format!(
            "epsilon must be positive, got {}",
            hp.epsilon
        )));
    }
    if !(g2 >= 0.0) {
        return Err(Error::InvalidHyperParam(format!("G2 must be non-negative, got {g2}")));
    }
    Ok((1.0 / (g2 + hp.epsilon), 1.0 / hp.epsilon))
}

/// `eta * sqrt(d) / ‖eta‖`, the AvaGrad rescaling. Requires strictly positive rates.
pub fn normalized_eta(eta: &Vector) -> Result<Vector> {
    if let Some(i) = eta.iter().position(|&e| !(e > 0.0)) {
        return Err(Error::InvalidHyperParam(format!(
            "rates must be positive, coordinate {i} is {}",
            eta[i]
        )));
    }
    let rms = eta.l2_norm() / libm::sqrt(eta.len() as f64);
    if rms == 0.0 {
        return Err(Error::InvalidHyperParam("rates have zero norm".into()));
    }
    Vector::new(eta.iter().map(|&e| e / rms).collect())
}
