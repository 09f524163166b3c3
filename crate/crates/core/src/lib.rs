//! Adaptive gradient methods with delayed parameter-wise rates, the stochastic
//! problems used to exercise them, and the trial diagnostics built on top.
//!
//! The crate is `no_std` (it needs `alloc`); everything touching files, threads,
//! or the command line lives in the `avagrad-lab` companion crate.

#![cfg_attr(not(test), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod optim;
pub mod problem;
pub mod rng;
pub mod runner;
pub mod schedule;
pub mod sweep;
pub mod vector;

pub use error::{Error, Result};
pub use optim::{DecayMode, HyperParams, Method, OptimizerState, StepReport};
pub use problem::{Domain, ProblemConstants, SampleToken, StochasticProblem};
pub use rng::RngStream;
pub use schedule::Schedule;
pub use vector::Vector;
