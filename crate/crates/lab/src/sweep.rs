//! Parallel execution of a grid on a bounded worker pool.

use std::sync::atomic::{AtomicUsize, Ordering};

use avagrad_core::sweep::{run_cell, separability_index, sort_cells, GridSpec, HeatmapCell};
use avagrad_core::{Method, StochasticProblem};
use rayon::prelude::*;

use crate::error::{LabError, LabResult};

pub(crate) fn pool(workers: usize) -> LabResult<rayon::ThreadPool> {
    if workers == 0 {
        return Err(LabError::Config("workers must be >= 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| LabError::Config(format!("cannot start worker pool: {e}")))
}

/// Runs every cell once and returns them sorted by `(method, alpha, epsilon, seed)`.
///
/// With `progress`, a `done/total` line goes to standard error per finished cell.
pub fn run_sweep<P: StochasticProblem + ?Sized>(
    spec: &GridSpec,
    problem: &P,
    workers: usize,
    progress: bool,
) -> LabResult<Vec<HeatmapCell>> {
    spec.validate()?;
    let ids = spec.cell_ids();
    let total = ids.len();
    let done = AtomicUsize::new(0);
    let mut cells: Vec<HeatmapCell> = pool(workers)?.install(|| {
        ids.par_iter()
            .map(|&id| {
                let cell = run_cell(spec, problem, id);
                let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                if progress {
                    eprintln!("{n}/{total}");
                }
                cell
            })
            .collect()
    });
    sort_cells(&mut cells);
    Ok(cells)
}

/// Separability per method; `None` where the index is undefined for this grid.
pub fn separability_summary(spec: &GridSpec, cells: &[HeatmapCell]) -> Vec<(Method, Option<f64>)> {
    spec.methods
        .iter()
        .map(|&m| (m, separability_index(cells, m).ok()))
        .collect()
}
