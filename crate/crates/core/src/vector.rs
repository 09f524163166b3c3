//! Dense `f64` coordinate vectors.
//!
//! Every public constructor and operation keeps the two invariants of the type:
//! at least one coordinate, and every coordinate finite. Operations that would
//! break either one return an error instead.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Index;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Vector(Vec<f64>);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementwiseOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarOp {
    Sqrt,
    Square,
    AddScalar(f64),
    Scale(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub linf: f64,
    pub min: f64,
    pub max: f64,
}

fn check_finite(data: &[f64]) -> Result<()> {
    match data.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

/// Neumaier-compensated sum; keeps the relative error at a few ulps for long inputs.
pub(crate) fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in values {
        let t = sum + x;
        if libm::fabs(sum) >= libm::fabs(x) {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

impl Vector {
    pub fn new(data: Vec<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Empty);
        }
        check_finite(&data)?;
        Ok(Self(data))
    }

    pub fn from_slice(data: &[f64]) -> Result<Self> {
        Self::new(data.to_vec())
    }

    pub fn filled(dim: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; dim])
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::filled(dim, 0.0)
    }

    pub fn ones(dim: usize) -> Result<Self> {
        Self::filled(dim, 1.0)
    }

    /// Wraps already-validated storage. Callers guarantee the invariants.
    pub(crate) fn from_raw(data: Vec<f64>) -> Self {
        debug_assert!(!data.is_empty());
        Self(data)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always false for a constructed vector; provided for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn iter(&self) -> core::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn elementwise(&self, other: &Vector, op: ElementwiseOp) -> Result<Vector> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        let mut out = Vec::with_capacity(self.len());
        for (i, (&a, &b)) in self.0.iter().zip(other.0.iter()).enumerate() {
            let r = match op {
                ElementwiseOp::Add => a + b,
                ElementwiseOp::Sub => a - b,
                ElementwiseOp::Mul => a * b,
                ElementwiseOp::Div => {
                    if b == 0.0 {
                        return Err(Error::DivisionByZero(i));
                    }
                    a / b
                }
            };
            out.push(r);
        }
        check_finite(&out)?;
        Ok(Vector(out))
    }

    pub fn map_scalar(&self, op: ScalarOp) -> Result<Vector> {
        let mut out = Vec::with_capacity(self.len());
        for (i, &a) in self.0.iter().enumerate() {
            let r = match op {
                ScalarOp::Sqrt => {
                    if a < 0.0 {
                        return Err(Error::NegativeSqrt(i));
                    }
                    libm::sqrt(a)
                }
                ScalarOp::Square => a * a,
                ScalarOp::AddScalar(c) => a + c,
                ScalarOp::Scale(c) => a * c,
            };
            out.push(r);
        }
        check_finite(&out)?;
        Ok(Vector(out))
    }

    pub fn norms(&self) -> Norms {
        let mut linf = 0.0f64;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &a in &self.0 {
            linf = linf.max(libm::fabs(a));
            min = min.min(a);
            max = max.max(a);
        }
        Norms {
            l2: self.l2_norm(),
            linf,
            min,
            max,
        }
    }

    pub fn l2_norm(&self) -> f64 {
        libm::sqrt(self.squared_l2_norm())
    }

    pub fn squared_l2_norm(&self) -> f64 {
        compensated_sum(self.0.iter().map(|&a| a * a))
    }

    pub fn mean(&self) -> f64 {
        compensated_sum(self.0.iter().copied()) / self.len() as f64
    }

    /// Euclidean projection onto the box `[lo, hi]^d`.
    pub fn clamp_box(&self, lo: f64, hi: f64) -> Result<Vector> {
        if !(lo <= hi) {
            return Err(Error::InvalidBounds { lo, hi });
        }
        Ok(Vector(self.0.iter().map(|&a| a.max(lo).min(hi)).collect()))
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(data: Vec<f64>) -> Result<Self> {
        Vector::new(data)
    }
}

impl AsRef<[f64]> for Vector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}
