//! One-dimensional two-outcome problem on which Adam fails to reach a
//! stationary point.
//!
//! With probability `p = (1 + delta) / (C + 1)` the sample is `C w^2 / 2`,
//! otherwise it is `-w`. The expected gradient is `p C w - (1 - p)`, so the
//! stationary point is `w* = (1 - p) / (C p)`, and at the right edge of the
//! feasible box `[0, 1]` the squared gradient is `delta^2`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{check_dim, Domain, ProblemConstants, SampleToken, StochasticProblem};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::vector::Vector;

pub const RARE: usize = 0;
pub const COMMON: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    c: f64,
    delta: f64,
    p: f64,
}

impl SynthParams {
    pub fn new(c: f64, delta: f64) -> Result<Self> {
        if !(c > 1.0) || !c.is_finite() {
            return Err(Error::InvalidProblem(format!("C must be finite and > 1, got {c}")));
        }
        if !(delta >= 0.0) {
            return Err(Error::InvalidProblem(format!("delta must be >= 0, got {delta}")));
        }
        let p = (1.0 + delta) / (c + 1.0);
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidProblem(format!("rare-sample probability {p} outside (0, 1)")));
        }
        if !(c > (1.0 - p) / p) {
            return Err(Error::InvalidProblem(format!(
                "C = {c} must exceed (1 - p) / p = {}",
                (1.0 - p) / p
            )));
        }
        Ok(Self { c, delta, p })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn w_star(&self) -> f64 {
        (1.0 - self.p) / (self.c * self.p)
    }

    /// `f(w) = p C w^2 / 2 - (1 - p) w`.
    pub fn f(&self, w: f64) -> f64 {
        self.p * (self.c * w * w / 2.0) + (1.0 - self.p) * (-w)
    }

    /// `∇f(w) = p (C w) + (1 - p)(-1)`.
    pub fn grad_f(&self, w: f64) -> f64 {
        self.p * (self.c * w) - (1.0 - self.p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthProblem {
    params: SynthParams,
}

impl SynthProblem {
    pub fn new(c: f64, delta: f64) -> Result<Self> {
        Ok(Self {
            params: SynthParams::new(c, delta)?,
        })
    }

    pub fn params(&self) -> &SynthParams {
        &self.params
    }

    fn outcome(token: &SampleToken) -> Result<usize> {
        match token {
            SampleToken::Outcome(i) if *i == RARE || *i == COMMON => Ok(*i),
            other => Err(Error::InvalidProblem(format!("not a synthetic-problem token: {other:?}"))),
        }
    }
}

impl StochasticProblem for SynthProblem {
    fn dim(&self) -> usize {
        1
    }

    fn domain(&self) -> Domain {
        Domain::Box { lo: 0.0, hi: 1.0 }
    }

    fn sample(&self, rng: &mut RngStream) -> SampleToken {
        if rng.uniform() < self.params.p {
            SampleToken::Outcome(RARE)
        } else {
            SampleToken::Outcome(COMMON)
        }
    }

    fn loss(&self, w: &Vector, token: &SampleToken) -> Result<f64> {
        check_dim(1, w)?;
        let x = w[0];
        Ok(match Self::outcome(token)? {
            RARE => self.params.c * x * x / 2.0,
            _ => -x,
        })
    }

    fn grad(&self, w: &Vector, token: &SampleToken) -> Result<Vector> {
        check_dim(1, w)?;
        let g = match Self::outcome(token)? {
            RARE => self.params.c * w[0],
            _ => -1.0,
        };
        Vector::new(vec![g])
    }

    fn full_grad(&self, w: &Vector) -> Result<Vector> {
        check_dim(1, w)?;
        Vector::new(vec![self.params.grad_f(w[0])])
    }

    fn full_loss(&self, w: &Vector) -> Result<f64> {
        check_dim(1, w)?;
        Ok(self.params.f(w[0]))
    }

    fn outcomes(&self) -> Option<Vec<(f64, SampleToken)>> {
        Some(vec![
            (self.params.p, SampleToken::Outcome(RARE)),
            (1.0 - self.params.p, SampleToken::Outcome(COMMON)),
        ])
    }

    fn constants(&self, w1: &Vector) -> Option<ProblemConstants> {
        if w1.len() != 1 {
            return None;
        }
        let sp = &self.params;
        let g = sp.c.max(1.0);
        Some(ProblemConstants {
            m: sp.p * sp.c,
            d_gap: (sp.f(w1[0]) - sp.f(sp.w_star())).max(0.0),
            g_inf: g,
            g_2: g,
        })
    }

    fn smoothness(&self) -> Option<f64> {
        Some(self.params.p * self.params.c)
    }

    fn initial_point(&self, _rng: &mut RngStream) -> Vector {
        Vector::from_raw(vec![0.5])
    }
}
