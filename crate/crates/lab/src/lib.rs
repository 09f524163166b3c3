//! Files, threads and the command line around `avagrad-core`: TOML experiment
//! configs, CSV datasets and artifacts, parallel sweeps, and the `avagrad-lab`
//! binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod export;
pub mod sweep;

pub use error::{LabError, LabResult};
