//! Learning-rate × epsilon grids and the separability summary of a finished sweep.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::optim::{HyperParams, Method};
use crate::problem::StochasticProblem;
use crate::rng::{mix_all, RngStream};
use crate::runner::{run_trial, TrialConfig, TrialStatus};
use crate::schedule::Schedule;
use crate::vector::Vector;

/// Stream index reserved for drawing a replicate's initial point.
const INIT_STREAM: u64 = u64::MAX;

/// Seed of the stream that draws replicate `seed`'s initial point.
pub fn replicate_init_seed(base_seed: u64, seed: u64) -> u64 {
    mix_all(base_seed, &[INIT_STREAM, seed])
}

fn decade_grid(mantissas: &[u32], first: (u32, i32), last: (u32, i32)) -> Vec<f64> {
    let mut out = Vec::new();
    for k in first.1..=last.1 {
        for &m in mantissas {
            if (k == first.1 && m < first.0) || (k == last.1 && m > last.0) {
                continue;
            }
            // Parsing the decimal literal gives the correctly rounded value of m·10^k.
            out.push(format!("{m}e{k}").parse().expect("decimal literal"));
        }
    }
    out
}

/// `{1, 5} × 10^k` from `5e-7` to `5e3`.
pub fn default_alphas() -> Vec<f64> {
    decade_grid(&[1, 5], (5, -7), (5, 3))
}

/// `{1, 2} × 10^k` from `1e-8` to `1e2`.
pub fn default_epsilons() -> Vec<f64> {
    decade_grid(&[1, 2], (1, -8), (1, 2))
}

pub fn default_grid() -> (Vec<f64>, Vec<f64>) {
    (default_alphas(), default_epsilons())
}

/// Every `stride`-th value starting at `offset`.
pub fn subgrid(values: &[f64], offset: usize, stride: usize) -> Vec<f64> {
    values.iter().skip(offset).step_by(stride.max(1)).copied().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub methods: Vec<Method>,
    pub alphas: Vec<f64>,
    pub epsilons: Vec<f64>,
    /// Replicate seeds; each one fixes the initial point shared by all cells.
    pub seeds: Vec<u64>,
    pub base_seed: u64,
    pub steps: u64,
    /// Shared starting point; drawn per replicate from the problem when absent.
    pub w1: Option<Vector>,
    /// Momentum, second-moment and decay settings; `alpha` and `epsilon` are
    /// replaced per cell.
    pub base: HyperParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellId {
    pub method: usize,
    pub alpha: usize,
    pub epsilon: usize,
    pub seed: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellStatus {
    Finished,
    Converged,
    Diverged,
    Failed,
}

impl CellStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CellStatus::Finished => "finished",
            CellStatus::Converged => "converged",
            CellStatus::Diverged => "diverged",
            CellStatus::Failed => "failed",
        }
    }

    pub fn is_ok(self) -> bool {
        matches!(self, CellStatus::Finished | CellStatus::Converged)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapCell {
    pub id: CellId,
    pub method: Method,
    pub alpha: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// `+∞` unless the status is ok.
    pub final_metric: f64,
    pub status: CellStatus,
}

fn check_axis(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidHyperParam(format!("{name} grid is empty")));
    }
    if values.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::InvalidHyperParam(format!("{name} grid values must be positive and finite")));
    }
    if values.windows(2).any(|p| !(p[0] < p[1])) {
        return Err(Error::InvalidHyperParam(format!("{name} grid must be strictly ascending")));
    }
    Ok(())
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidHyperParam("no methods in grid".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidHyperParam("no seeds in grid".into()));
        }
        if self.steps == 0 {
            return Err(Error::InvalidHyperParam("grid needs at least one step".into()));
        }
        check_axis("alpha", &self.alphas)?;
        check_axis("epsilon", &self.epsilons)?;
        let mut seen = self.methods.clone();
        seen.sort_by_key(|m| m.name());
        seen.dedup();
        if seen.len() != self.methods.len() {
            return Err(Error::InvalidHyperParam("duplicate method in grid".into()));
        }
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.methods.len() * self.alphas.len() * self.epsilons.len() * self.seeds.len()
    }

    /// All cells in `(method, alpha, epsilon, seed)` index order.
    pub fn cell_ids(&self) -> Vec<CellId> {
        let mut ids = Vec::with_capacity(self.n_cells());
        for method in 0..self.methods.len() {
            for alpha in 0..self.alphas.len() {
                for epsilon in 0..self.epsilons.len() {
                    for seed in 0..self.seeds.len() {
                        ids.push(CellId {
                            method,
                            alpha,
                            epsilon,
                            seed,
                        });
                    }
                }
            }
        }
        ids
    }

    /// Depends only on the cell's identity, never on scheduling.
    pub fn cell_seed(&self, id: CellId) -> u64 {
        mix_all(
            self.base_seed,
            &[id.method as u64, id.alpha as u64, id.epsilon as u64, id.seed as u64],
        )
    }

    pub fn init_seed(&self, seed_idx: usize) -> u64 {
        replicate_init_seed(self.base_seed, self.seeds[seed_idx])
    }

    pub fn hyperparams(&self, id: CellId) -> HyperParams {
        HyperParams {
            alpha: match self.base.alpha {
                Schedule::InverseSqrt(_) => Schedule::InverseSqrt(self.alphas[id.alpha]),
                _ => Schedule::Constant(self.alphas[id.alpha]),
            },
            epsilon: self.epsilons[id.epsilon],
            ..self.base
        }
    }
}

/// Runs one cell; failures become `Diverged` or `Failed` cells rather than errors.
pub fn run_cell<P: StochasticProblem + ?Sized>(spec: &GridSpec, problem: &P, id: CellId) -> HeatmapCell {
    let method = spec.methods[id.method];
    let mut cell = HeatmapCell {
        id,
        method,
        alpha: spec.alphas[id.alpha],
        epsilon: spec.epsilons[id.epsilon],
        seed: spec.seeds[id.seed],
        final_metric: f64::INFINITY,
        status: CellStatus::Failed,
    };
    let w1 = match &spec.w1 {
        Some(w) => w.clone(),
        None => problem.initial_point(&mut RngStream::new(spec.init_seed(id.seed))),
    };
    let cfg = TrialConfig::new(method, spec.hyperparams(id), spec.steps, w1, spec.cell_seed(id))
        .with_record_every(spec.steps)
        .with_full_grad_metric(false);
    let outcome = match run_trial(&cfg, problem) {
        Ok(o) => o,
        Err(_) => return cell,
    };
    match outcome.record.status {
        TrialStatus::Diverged => cell.status = CellStatus::Diverged,
        status => match problem.eval_loss(&outcome.final_w) {
            Ok(metric) if metric.is_finite() => {
                cell.final_metric = metric;
                cell.status = if status == TrialStatus::Converged {
                    CellStatus::Converged
                } else {
                    CellStatus::Finished
                };
            }
            Ok(_) => cell.status = CellStatus::Diverged,
            Err(_) => cell.status = CellStatus::Failed,
        },
    }
    cell
}

/// Sorts by `(method, alpha, epsilon, seed)` in grid index order.
pub fn sort_cells(cells: &mut [HeatmapCell]) {
    cells.sort_by_key(|c| c.id);
}

/// Fraction of epsilon columns whose best alpha equals the most common best alpha.
///
/// The best alpha of a column minimizes the seed-averaged metric, with
/// non-ok cells ranked as `+∞` and ties going to the smaller alpha.
pub fn separability_index(cells: &[HeatmapCell], method: Method) -> Result<f64> {
    // epsilon bits -> alpha bits -> (sum, count)
    let mut table: BTreeMap<u64, BTreeMap<u64, (f64, usize)>> = BTreeMap::new();
    let mut keys: BTreeMap<u64, f64> = BTreeMap::new();
    for c in cells.iter().filter(|c| c.method == method) {
        let metric = if c.status.is_ok() { c.final_metric } else { f64::INFINITY };
        let entry = table
            .entry(c.epsilon.to_bits())
            .or_default()
            .entry(c.alpha.to_bits())
            .or_insert((0.0, 0));
        entry.0 += metric;
        entry.1 += 1;
        keys.insert(c.alpha.to_bits(), c.alpha);
    }
    if table.len() < 2 {
        return Err(Error::InvalidRecord(format!(
            "{method}: separability needs at least two epsilon values"
        )));
    }
    let alpha_count = keys.len();
    let mut best_counts: BTreeMap<u64, usize> = BTreeMap::new();
    for (eps_bits, column) in &table {
        let eps = f64::from_bits(*eps_bits);
        if column.len() != alpha_count {
            return Err(Error::InvalidRecord(format!("{method}: incomplete grid at epsilon {eps}")));
        }
        let mut best: Option<(f64, f64)> = None;
        for (alpha_bits, &(sum, n)) in column {
            let mean = sum / n as f64;
            let alpha = f64::from_bits(*alpha_bits);
            let better = match best {
                None => mean.is_finite(),
                Some((best_alpha, best_mean)) => mean < best_mean || (mean == best_mean && alpha < best_alpha),
            };
            if better {
                best = Some((alpha, mean));
            }
        }
        let (alpha, _) = best.ok_or_else(|| {
            Error::InvalidRecord(format!("{method}: every alpha diverged at epsilon {eps}"))
        })?;
        *best_counts.entry(alpha.to_bits()).or_default() += 1;
    }
    let mut modal = 0usize;
    let mut modal_alpha = f64::INFINITY;
    for (bits, &count) in &best_counts {
        let alpha = f64::from_bits(*bits);
        if count > modal || (count == modal && alpha < modal_alpha) {
            modal = count;
            modal_alpha = alpha;
        }
    }
    Ok(modal as f64 / table.len() as f64)
}
