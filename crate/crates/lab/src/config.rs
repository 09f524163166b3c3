//! Experiment configuration files.
//!
//! ```toml
//! [problem]
//! kind = "synth"          # synth | quadratic | mlp
//! c = 999.0
//! delta = 1.0
//!
//! [optimizer]
//! method = "delayed_adam"
//! alpha = 1e-5
//! epsilon = 1e-8
//! beta1 = 0.0
//! beta2 = 0.99
//!
//! [run]
//! steps = 1000000
//! seed = 0
//! replicates = 10
//! record_every = 1000
//! out = "out"
//!
//! [grid]                  # sweep only
//! default = true
//! methods = ["adam", "avagrad"]
//! ```
//!
//! Unknown keys are rejected. Relative dataset paths resolve against the
//! directory holding the config file.

use std::path::{Path, PathBuf};

use avagrad_core::problem::{gaussian_blobs, MlpProblem, QuadraticProblem, SynthProblem};
use avagrad_core::sweep::{default_alphas, default_epsilons, GridSpec};
use avagrad_core::{DecayMode, HyperParams, Method, RngStream, Schedule, StochasticProblem, Vector};
use serde::Deserialize;

use crate::dataset::load_csv_dataset;
use crate::error::{LabError, LabResult};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub run: RunConfig,
    pub grid: Option<GridConfig>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    Synth {
        #[serde(default = "default_c")]
        c: f64,
        #[serde(default = "default_delta")]
        delta: f64,
        w1: Option<f64>,
    },
    Quadratic {
        /// Explicit curvatures; otherwise `dim` values log-spaced over `[1, condition]`.
        curvatures: Option<Vec<f64>>,
        dim: Option<usize>,
        #[serde(default = "one")]
        condition: f64,
        #[serde(default = "default_noise")]
        noise_std: f64,
        #[serde(default)]
        data_seed: u64,
        w1: Option<Vec<f64>>,
    },
    Mlp {
        /// Training rows; gaussian blobs are generated when absent.
        dataset: Option<PathBuf>,
        holdout: Option<PathBuf>,
        #[serde(default = "default_n_in")]
        n_in: usize,
        #[serde(default = "default_n_classes")]
        n_classes: usize,
        #[serde(default = "default_n_hidden")]
        n_hidden: usize,
        #[serde(default = "default_batch")]
        batch_size: usize,
        #[serde(default = "default_per_class")]
        n_per_class: usize,
        #[serde(default = "default_per_class")]
        holdout_per_class: usize,
        #[serde(default = "default_separation")]
        separation: f64,
        #[serde(default)]
        data_seed: u64,
    },
}

fn default_c() -> f64 {
    999.0
}
fn default_delta() -> f64 {
    1.0
}
fn one() -> f64 {
    1.0
}
fn default_noise() -> f64 {
    0.1
}
fn default_n_in() -> usize {
    2
}
fn default_n_classes() -> usize {
    3
}
fn default_n_hidden() -> usize {
    8
}
fn default_batch() -> usize {
    16
}
fn default_per_class() -> usize {
    100
}
fn default_separation() -> f64 {
    3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    #[default]
    Constant,
    InverseSqrt,
    /// `1 - 1/t`; the configured value is ignored.
    InverseT,
}

impl ScheduleKind {
    fn build(self, value: f64) -> Schedule {
        match self {
            ScheduleKind::Constant => Schedule::Constant(value),
            ScheduleKind::InverseSqrt => Schedule::InverseSqrt(value),
            ScheduleKind::InverseT => Schedule::InverseT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub method: String,
    pub alpha: f64,
    pub epsilon: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub alpha_schedule: ScheduleKind,
    pub beta1_schedule: ScheduleKind,
    pub beta2_schedule: ScheduleKind,
    pub weight_decay: f64,
    pub decay_mode: String,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            method: "adam".into(),
            alpha: 1e-3,
            epsilon: 1e-8,
            beta1: 0.9,
            beta2: 0.999,
            alpha_schedule: ScheduleKind::Constant,
            beta1_schedule: ScheduleKind::Constant,
            beta2_schedule: ScheduleKind::Constant,
            weight_decay: 0.0,
            decay_mode: "none".into(),
        }
    }
}

impl OptimizerConfig {
    pub fn method(&self) -> LabResult<Method> {
        parse_method(&self.method)
    }

    pub fn hyperparams(&self) -> LabResult<HyperParams> {
        let decay_mode: DecayMode = self
            .decay_mode
            .parse()
            .map_err(|_| LabError::Config(format!("unknown decay_mode {:?}", self.decay_mode)))?;
        let hp = HyperParams {
            alpha: self.alpha_schedule.build(self.alpha),
            epsilon: self.epsilon,
            beta1: self.beta1_schedule.build(self.beta1),
            beta2: self.beta2_schedule.build(self.beta2),
            weight_decay: self.weight_decay,
            decay_mode,
        };
        hp.validate()?;
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(LabError::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        Ok(hp)
    }
}

pub fn parse_method(name: &str) -> LabResult<Method> {
    name.parse()
        .map_err(|_| LabError::Config(format!("unknown method {name:?}")))
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub steps: u64,
    /// Base seed; every trial seed is derived from it.
    pub seed: Option<u64>,
    pub replicates: u64,
    pub record_every: u64,
    pub out: PathBuf,
    pub tolerance: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            steps: 1000,
            seed: None,
            replicates: 1,
            record_every: 1,
            out: PathBuf::from("out"),
            tolerance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub default: bool,
    pub alphas: Option<Vec<f64>>,
    pub epsilons: Option<Vec<f64>>,
    /// Defaults to the `[optimizer]` method.
    pub methods: Option<Vec<String>>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub epsilon: Option<f64>,
    pub method: Option<String>,
    pub steps: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: Config,
    /// Directory relative paths resolve against.
    pub base_dir: PathBuf,
}

impl Config {
    pub fn parse_str(text: &str, origin: &Path) -> LabResult<Config> {
        toml::from_str(text).map_err(|source| LabError::Toml {
            path: origin.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> LabResult<LoadedConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        let config = Self::parse_str(&text, path)?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(LoadedConfig { config, base_dir })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(a) = o.alpha {
            self.optimizer.alpha = a;
        }
        if let Some(e) = o.epsilon {
            self.optimizer.epsilon = e;
        }
        if let Some(m) = &o.method {
            self.optimizer.method = m.clone();
            if let Some(grid) = &mut self.grid {
                grid.methods = Some(vec![m.clone()]);
            }
        }
        if let Some(t) = o.steps {
            self.run.steps = t;
        }
        if let Some(s) = o.seed {
            self.run.seed = Some(s);
        }
        if let Some(out) = &o.out {
            self.run.out = out.clone();
        }
    }

    pub fn base_seed(&self) -> u64 {
        self.run.seed.unwrap_or(0)
    }

    pub fn validate_run(&self) -> LabResult<()> {
        if self.run.steps == 0 {
            return Err(LabError::Config("run.steps must be >= 1".into()));
        }
        if self.run.record_every == 0 {
            return Err(LabError::Config("run.record_every must be >= 1".into()));
        }
        if self.run.replicates == 0 {
            return Err(LabError::Config("run.replicates must be >= 1".into()));
        }
        Ok(())
    }

    /// The configured grid, with alpha and epsilon replaced per cell.
    pub fn grid_spec(&self, w1: Option<Vector>) -> LabResult<GridSpec> {
        self.validate_run()?;
        let grid = self
            .grid
            .as_ref()
            .ok_or_else(|| LabError::Config("sweep requires a [grid] section".into()))?;
        let (alphas, epsilons) = match (grid.default, &grid.alphas, &grid.epsilons) {
            (true, None, None) => (default_alphas(), default_epsilons()),
            (true, _, _) => {
                return Err(LabError::Config(
                    "grid.default = true cannot be combined with explicit alphas/epsilons".into(),
                ))
            }
            (false, Some(a), Some(e)) => (a.clone(), e.clone()),
            (false, _, _) => {
                return Err(LabError::Config(
                    "grid needs `default = true` or both `alphas` and `epsilons`".into(),
                ))
            }
        };
        let methods = match &grid.methods {
            Some(names) => names.iter().map(|n| parse_method(n)).collect::<LabResult<Vec<_>>>()?,
            None => vec![self.optimizer.method()?],
        };
        let spec = GridSpec {
            methods,
            alphas,
            epsilons,
            seeds: (0..self.run.replicates).collect(),
            base_seed: self.base_seed(),
            steps: self.run.steps,
            w1,
            base: self.optimizer.hyperparams()?,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// A constructed problem and the starting point the config pins, if any.
pub struct BuiltProblem {
    pub problem: Box<dyn StochasticProblem>,
    pub w1: Option<Vector>,
    pub kind: &'static str,
}

fn log_spaced(n: usize, hi: f64) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| hi.powf(i as f64 / (n - 1) as f64))
        .collect()
}

pub fn build_problem(cfg: &ProblemConfig, base_dir: &Path) -> LabResult<BuiltProblem> {
    match cfg {
        ProblemConfig::Synth { c, delta, w1 } => Ok(BuiltProblem {
            problem: Box::new(SynthProblem::new(*c, *delta)?),
            w1: w1.map(|x| Vector::from_slice(&[x])).transpose()?,
            kind: "synth",
        }),
        ProblemConfig::Quadratic {
            curvatures,
            dim,
            condition,
            noise_std,
            data_seed,
            w1,
        } => {
            let curv = match (curvatures, dim) {
                (Some(c), None) => c.clone(),
                (Some(c), Some(d)) if c.len() == *d => c.clone(),
                (Some(_), Some(_)) => {
                    return Err(LabError::Config("problem.dim disagrees with curvatures".into()))
                }
                (None, Some(d)) if *d >= 1 => {
                    if !(*condition >= 1.0) {
                        return Err(LabError::Config("problem.condition must be >= 1".into()));
                    }
                    log_spaced(*d, *condition)
                }
                _ => {
                    return Err(LabError::Config(
                        "quadratic problem needs `curvatures` or `dim`".into(),
                    ))
                }
            };
            let mut rng = RngStream::new(*data_seed);
            let q = QuadraticProblem::random(Vector::new(curv)?, *noise_std, &mut rng)?;
            Ok(BuiltProblem {
                problem: Box::new(q),
                w1: w1.clone().map(Vector::new).transpose()?,
                kind: "quadratic",
            })
        }
        ProblemConfig::Mlp {
            dataset,
            holdout,
            n_in,
            n_classes,
            n_hidden,
            batch_size,
            n_per_class,
            holdout_per_class,
            separation,
            data_seed,
        } => {
            let mut rng = RngStream::new(*data_seed);
            let train = match dataset {
                Some(p) => load_csv_dataset(&base_dir.join(p), *n_in, *n_classes)?,
                None => gaussian_blobs(*n_per_class, *n_classes, *n_in, *separation, &mut rng)?,
            };
            let held = match (holdout, dataset) {
                (Some(p), _) => Some(load_csv_dataset(&base_dir.join(p), *n_in, *n_classes)?),
                (None, None) => Some(gaussian_blobs(
                    *holdout_per_class,
                    *n_classes,
                    *n_in,
                    *separation,
                    &mut rng,
                )?),
                (None, Some(_)) => None,
            };
            let mut mlp = MlpProblem::new(*n_in, *n_hidden, *n_classes, train)?
                .with_batch_size(*batch_size)?;
            if let Some(h) = held {
                mlp = mlp.with_holdout(h)?;
            }
            Ok(BuiltProblem {
                problem: Box::new(mlp),
                w1: None,
                kind: "mlp",
            })
        }
    }
}
