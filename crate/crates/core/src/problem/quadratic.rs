use alloc::format;
use alloc::vec::Vec;

use super::{check_dim, SampleToken, StochasticProblem};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::vector::Vector;

/// Separable quadratic `f_s(w) = ½ Σ c_i (w_i - ξ_{s,i})²` with `ξ_s ~ N(w*, σ² I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProblem {
    curvatures: Vector,
    optimum: Vector,
    noise_std: f64,
}

impl QuadraticProblem {
    pub fn new(curvatures: Vector, optimum: Vector, noise_std: f64) -> Result<Self> {
        check_dim(curvatures.len(), &optimum)?;
        if let Some(i) = curvatures.iter().position(|&c| !(c > 0.0)) {
            return Err(Error::InvalidProblem(format!(
                "curvature {i} must be positive, got {}",
                curvatures[i]
            )));
        }
        if !(noise_std >= 0.0) || !noise_std.is_finite() {
            return Err(Error::InvalidProblem(format!(
                "noise_std must be finite and >= 0, got {noise_std}"
            )));
        }
        Ok(Self {
            curvatures,
            optimum,
            noise_std,
        })
    }

    /// Draws the optimum from a standard normal per coordinate.
    pub fn random(curvatures: Vector, noise_std: f64, rng: &mut RngStream) -> Result<Self> {
        let optimum: Vec<f64> = (0..curvatures.len()).map(|_| rng.standard_normal()).collect();
        Self::new(curvatures, Vector::new(optimum)?, noise_std)
    }

    pub fn curvatures(&self) -> &Vector {
        &self.curvatures
    }

    pub fn optimum(&self) -> &Vector {
        &self.optimum
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    fn shift<'a>(&self, token: &'a SampleToken) -> Result<&'a [f64]> {
        match token {
            SampleToken::Shift(xi) if xi.len() == self.dim() => Ok(xi),
            other => Err(Error::InvalidProblem(format!("not a quadratic-problem token: {other:?}"))),
        }
    }
}

impl StochasticProblem for QuadraticProblem {
    fn dim(&self) -> usize {
        self.curvatures.len()
    }

    fn sample(&self, rng: &mut RngStream) -> SampleToken {
        SampleToken::Shift(
            self.optimum
                .iter()
                .map(|&o| if self.noise_std > 0.0 { rng.normal(o, self.noise_std) } else { o })
                .collect(),
        )
    }

    fn loss(&self, w: &Vector, token: &SampleToken) -> Result<f64> {
        check_dim(self.dim(), w)?;
        let xi = self.shift(token)?;
        Ok(self
            .curvatures
            .iter()
            .zip(w.iter().zip(xi))
            .map(|(&c, (&wi, &x))| 0.5 * c * (wi - x) * (wi - x))
            .sum())
    }

    fn grad(&self, w: &Vector, token: &SampleToken) -> Result<Vector> {
        check_dim(self.dim(), w)?;
        let xi = self.shift(token)?;
        Vector::new(
            self.curvatures
                .iter()
                .zip(w.iter().zip(xi))
                .map(|(&c, (&wi, &x))| c * (wi - x))
                .collect(),
        )
    }

    fn full_grad(&self, w: &Vector) -> Result<Vector> {
        check_dim(self.dim(), w)?;
        Vector::new(
            self.curvatures
                .iter()
                .zip(w.iter().zip(self.optimum.iter()))
                .map(|(&c, (&wi, &o))| c * (wi - o))
                .collect(),
        )
    }

    fn full_loss(&self, w: &Vector) -> Result<f64> {
        check_dim(self.dim(), w)?;
        let var = self.noise_std * self.noise_std;
        Ok(self
            .curvatures
            .iter()
            .zip(w.iter().zip(self.optimum.iter()))
            .map(|(&c, (&wi, &o))| 0.5 * c * ((wi - o) * (wi - o) + var))
            .sum())
    }

    fn smoothness(&self) -> Option<f64> {
        Some(self.curvatures.norms().max)
    }

    fn initial_point(&self, _rng: &mut RngStream) -> Vector {
        Vector::from_raw(alloc::vec![0.0; self.dim()])
    }
}
