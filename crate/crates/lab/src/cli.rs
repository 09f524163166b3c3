use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{cmd_check, cmd_run, cmd_sweep, cmd_synthfig, default_out, Outcome};
use crate::config::{Config, Overrides};
use crate::error::LabResult;

pub const SEED_ENV: &str = "AVAGRAD_LAB_SEED";

#[derive(Debug, Parser)]
#[command(name = "avagrad-lab", version, about = "Adaptive-optimizer experiments: trials, sweeps and diagnostics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one trial per replicate and write trajectory CSVs.
    Run(ConfigArgs),
    /// Reproduce the synthetic-problem curves for Adam, AMSGrad and delayed Adam.
    Synthfig(SynthArgs),
    /// Run an alpha x epsilon grid and write a heatmap plus separability summary.
    Sweep {
        #[command(flatten)]
        args: ConfigArgs,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
    },
    /// Gradient check, bias diagnostic and rate-bound report.
    Check(ConfigArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub steps: Option<u64>,
    /// Base seed; falls back to the environment, then to the config file.
    #[arg(long, env = SEED_ENV)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl ConfigArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            alpha: self.alpha,
            epsilon: self.epsilon,
            method: self.method.clone(),
            steps: self.steps,
            seed: self.seed,
            out: self.out.clone(),
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_os_t = default_out())]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1_000_000)]
    pub steps: u64,
    /// Number of replicates averaged per curve.
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = default_workers())]
    pub workers: usize,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

pub fn execute(cli: Cli, log: &mut dyn Write) -> LabResult<Outcome> {
    match cli.command {
        Command::Run(a) => cmd_run(Config::load(&a.config)?, &a.overrides(), log),
        Command::Synthfig(a) => cmd_synthfig(&a.out, a.steps, a.seeds, a.seed, a.workers, log),
        Command::Sweep { args, workers } => cmd_sweep(Config::load(&args.config)?, &args.overrides(), workers, log),
        Command::Check(a) => cmd_check(Config::load(&a.config)?, &a.overrides(), log),
    }
}

/// Parses the process arguments, runs the command and returns the exit code:
/// 0 on success, 1 on config or IO errors, 2 on divergence or a failed check.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(cli, &mut lock) {
        Ok(outcome) => {
            let _ = lock.flush();
            outcome.exit_code()
        }
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {e}");
            1
        }
    }
}
