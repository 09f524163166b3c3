//! Step-indexed scalar schedules for the global rate and the moment decays.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    /// `base` at every step.
    Constant(f64),
    /// `base / sqrt(t)`.
    InverseSqrt(f64),
    /// `1 - 1/t`; used for the second-moment decay that recovers a running average.
    InverseT,
}

impl Schedule {
    pub fn eval(&self, t: u64) -> Result<f64> {
        if t == 0 {
            return Err(Error::ZeroStep);
        }
        Ok(match *self {
            Schedule::Constant(base) => base,
            Schedule::InverseSqrt(base) => base / libm::sqrt(t as f64),
            Schedule::InverseT => 1.0 - 1.0 / t as f64,
        })
    }

    /// Base value, or `None` for [`Schedule::InverseT`].
    pub fn base(&self) -> Option<f64> {
        match *self {
            Schedule::Constant(b) | Schedule::InverseSqrt(b) => Some(b),
            Schedule::InverseT => None,
        }
    }

    /// True when the schedule evaluates into `[0, 1)` at every step.
    pub fn is_decay_rate(&self) -> bool {
        match *self {
            Schedule::Constant(b) | Schedule::InverseSqrt(b) => (0.0..1.0).contains(&b),
            Schedule::InverseT => true,
        }
    }

    /// True when the schedule is identically zero.
    pub fn is_zero(&self) -> bool {
        matches!(*self, Schedule::Constant(b) | Schedule::InverseSqrt(b) if b == 0.0)
    }
}
