//! Stochastic objectives `f(w) = E_s[f_s(w)]` exposed through per-sample
//! gradient oracles.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::vector::Vector;

mod fdcheck;
mod mlp;
mod quadratic;
mod synth;

pub use fdcheck::fd_check;
pub use mlp::{gaussian_blobs, LabeledSet, MlpProblem};
pub use quadratic::QuadraticProblem;
pub use synth::{SynthParams, SynthProblem};

/// Identifies the data point `s` drawn for one stochastic gradient.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleToken {
    /// Index into a finite outcome set.
    Outcome(usize),
    /// Per-sample target shift of a quadratic.
    Shift(Vec<f64>),
    /// Mini-batch of dataset row indices.
    Batch(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Unconstrained,
    Box { lo: f64, hi: f64 },
}

impl Domain {
    pub fn project(&self, w: &Vector) -> Result<Vector> {
        match *self {
            Domain::Unconstrained => Ok(w.clone()),
            Domain::Box { lo, hi } => w.clamp_box(lo, hi),
        }
    }
}

/// Constants entering the non-convex rate bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemConstants {
    /// Smoothness constant of `f`.
    pub m: f64,
    /// Bound on `f(w_1) - f(w*)`.
    pub d_gap: f64,
    /// Bound on `‖∇f_s(w)‖_∞`.
    pub g_inf: f64,
    /// Bound on `‖∇f_s(w)‖_2`.
    pub g_2: f64,
}

pub trait StochasticProblem: Send + Sync {
    fn dim(&self) -> usize;

    fn domain(&self) -> Domain {
        Domain::Unconstrained
    }

    /// Draws a data point using only `rng`.
    fn sample(&self, rng: &mut RngStream) -> SampleToken;

    fn loss(&self, w: &Vector, token: &SampleToken) -> Result<f64>;

    fn grad(&self, w: &Vector, token: &SampleToken) -> Result<Vector>;

    fn full_grad(&self, _w: &Vector) -> Result<Vector> {
        Err(Error::Unavailable("full gradient"))
    }

    fn full_loss(&self, _w: &Vector) -> Result<f64> {
        Err(Error::Unavailable("full loss"))
    }

    /// Loss used to score a finished trial; held-out loss where the problem has one.
    fn eval_loss(&self, w: &Vector) -> Result<f64> {
        self.full_loss(w)
    }

    /// The full outcome distribution as `(probability, token)` pairs, when finite.
    fn outcomes(&self) -> Option<Vec<(f64, SampleToken)>> {
        None
    }

    /// Rate-bound constants for a trial started at `w1`.
    fn constants(&self, _w1: &Vector) -> Option<ProblemConstants> {
        None
    }

    /// Smoothness constant of `f`, when known.
    fn smoothness(&self) -> Option<f64> {
        None
    }

    /// Default starting point; may consume randomness.
    fn initial_point(&self, rng: &mut RngStream) -> Vector;
}

pub(crate) fn check_dim(expected: usize, w: &Vector) -> Result<()> {
    if w.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: w.len(),
        });
    }
    Ok(())
}
