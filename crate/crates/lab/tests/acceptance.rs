//! Acceptance criteria. Prints one `PASS` or `FAIL` line per criterion and
//! exits non-zero if any criterion fails.

#[path = "../../core/tests/support/oracle.rs"]
mod oracle;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;

use avagrad_core::optim::normalized_eta;
use avagrad_core::problem::{fd_check, gaussian_blobs, MlpProblem, QuadraticProblem, SynthProblem};
use avagrad_core::runner::{
    bias_gap, eval_bound, run_trial, unit_gamma_alpha, BiasMode, BoundVariant, TrialConfig,
};
use avagrad_core::sweep::{default_alphas, default_epsilons, default_grid, separability_index, subgrid, GridSpec};
use avagrad_core::{DecayMode, HyperParams, Method, OptimizerState, RngStream, StochasticProblem, Vector};
use avagrad_lab::commands::{synth_figure, synth_hyperparams};
use avagrad_lab::export::{export_heatmap, HEATMAP_HEADER};
use avagrad_lab::sweep::run_sweep;
use oracle::{Decay, RefOpt};
use rayon::prelude::*;

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn w1(x: f64) -> Vector {
    Vector::from_slice(&[x]).unwrap()
}

// 1. Synthetic divergence at T = 1e6, 10 seeds.
fn synthetic_divergence() -> Verdict {
    let fig = synth_figure(1_000_000, 10, 0, workers()).map_err(|e| e.to_string())?;
    let idx = |m: Method| fig.methods.iter().position(|&x| x == m).unwrap();
    let (adam, ams, delayed) = (idx(Method::Adam), idx(Method::AmsGrad), idx(Method::DelayedAdam));
    let last = |v: &Vec<Vec<f64>>, i: usize| *v[i].last().unwrap();
    let w_star = SynthProblem::new(999.0, 1.0).unwrap().params().w_star();

    let adam_g = last(&fig.grad_norm_sq_mean, adam);
    let adam_w = last(&fig.w_mean, adam);
    let delayed_tail = fig.tail_grad_norm_sq_mean[delayed];
    let delayed_w = last(&fig.w_mean, delayed);
    let delayed_g = last(&fig.grad_norm_sq_mean, delayed);
    let ams_g = last(&fig.grad_norm_sq_mean, ams);

    let a = adam_g >= 0.5 && adam_w > 0.9;
    let b = delayed_tail <= 1e-3 && (delayed_w - w_star).abs() <= 0.05;
    let c = delayed_g < ams_g;
    check(
        a && b && c,
        format!(
            "(a) {} adam grad_mean={adam_g:.4} w_mean={adam_w:.4}; \
             (b) {} delayed tail={delayed_tail:.3e} w_mean={delayed_w:.4} (w*={w_star:.4}); \
             (c) {} delayed grad_mean={delayed_g:.3e} vs amsgrad {ams_g:.3e}",
            ok(a),
            ok(b),
            ok(c)
        ),
    )
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "miss"
    }
}

// 2. Every optimizer against the scalar reference, 1000 steps, d in {1, 3, 64}.
fn step_oracle() -> Verdict {
    let rel = |a: f64, b: f64, scale: f64| (a - b).abs() / a.abs().max(b.abs()).max(scale).max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for (k, method) in Method::ALL.into_iter().enumerate() {
        for d in [1usize, 3, 64] {
            let mut rng = RngStream::derive(2, &[k as u64, d as u64]);
            let (mode, ref_mode) = [
                (DecayMode::None, Decay::None),
                (DecayMode::CoupledL2, Decay::Coupled),
                (DecayMode::Decoupled, Decay::Decoupled),
            ][(k + d) % 3];
            let hp = HyperParams::constant(1e-3, 1e-6, 0.9, 0.99).with_weight_decay(1e-2, mode);
            let mut lib = OptimizerState::new(method, d).unwrap();
            let mut reference = RefOpt::new(method.name(), d);
            let mut w = Vector::new((0..d).map(|_| rng.standard_normal()).collect()).unwrap();
            for _ in 0..1000 {
                let g: Vec<f64> = (0..d).map(|_| rng.normal(0.0, 2.0)).collect();
                let before = w.as_slice().to_vec();
                let r = reference.step(&before, &g, 1e-3, 0.9, 0.99, 1e-6, 1e-2, ref_mode);
                let rep = lib.step(&hp, &mut w, &Vector::new(g).unwrap()).unwrap();
                for i in 0..d {
                    worst = worst.max(rel(w[i], r.w[i], before[i].abs()));
                    worst = worst.max(rel(rep.eta[i], r.eta[i], 0.0));
                }
                worst = worst.max(rel(rep.alpha_eff, r.alpha_eff, 0.0));
                reference.m = lib.m().as_slice().to_vec();
                reference.v = lib.v().as_slice().to_vec();
                if let Some(vh) = lib.v_hat() {
                    reference.vhat = vh.as_slice().to_vec();
                }
            }
        }
    }
    check(worst <= 1e-12, format!("max relative error {worst:.2e} (tol 1e-12)"))
}

// 3. AvaGrad equals momentum SGD in one dimension.
fn avagrad_reduction() -> Verdict {
    let mut worst = 0.0f64;
    let mut rng = RngStream::new(3);
    for trial in 0..20 {
        let eps = 10f64.powf(-8.0 + 10.0 * rng.uniform());
        let alpha = 10f64.powf(-4.0 + 3.0 * rng.uniform());
        let beta1 = 0.99 * rng.uniform();
        let hp = HyperParams::constant(alpha, eps, beta1, 0.999);
        let mut ava = OptimizerState::new(Method::AvaGrad, 1).unwrap();
        let mut sgd = OptimizerState::new(Method::MomentumSgd, 1).unwrap();
        let start = rng.normal(0.0, 1.0);
        let (mut wa, mut ws) = (w1(start), w1(start));
        for _ in 0..100 {
            let g = w1(rng.normal(0.0, 1.0 + trial as f64));
            ava.step(&hp, &mut wa, &g).unwrap();
            sgd.step(&hp, &mut ws, &g).unwrap();
            let scale = ws[0].abs().max(1.0);
            worst = worst.max((wa[0] - ws[0]).abs() / scale);
        }
    }
    check(worst <= 1e-15, format!("max scaled deviation {worst:.2e} over 20 sequences (tol 1e-15)"))
}

// 4. Normalized rates ignore a global scale.
fn normalization_invariance() -> Verdict {
    let mut rng = RngStream::new(4);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let d = 1 + (rng.uniform() * 64.0) as usize;
        let eta: Vec<f64> = (0..d).map(|_| 10f64.powf(-4.0 + 8.0 * rng.uniform())).collect();
        let base = normalized_eta(&Vector::new(eta.clone()).unwrap()).unwrap();
        for c in [1e-6, 1.0, 1e6] {
            let scaled = normalized_eta(&Vector::new(eta.iter().map(|e| c * e).collect()).unwrap()).unwrap();
            for (a, b) in base.iter().zip(scaled.iter()) {
                worst = worst.max((a - b).abs() / a.abs().max(b.abs()));
            }
        }
    }
    check(worst <= 1e-14, format!("max relative difference {worst:.2e} (tol 1e-14)"))
}

// 5. Exact expectation of the rate-gradient product.
fn bias_diagnostic() -> Verdict {
    let prob = SynthProblem::new(999.0, 1.0).unwrap();
    let (p, c) = (prob.params().p(), prob.params().c());
    let mut rng = RngStream::new(5);
    let hp = synth_hyperparams();
    let (mut max_delayed, mut min_adam) = (0.0f64, f64::INFINITY);
    for _ in 0..50 {
        let w = rng.uniform();
        let stationary = p * c * c * w * w + (1.0 - p);
        let v = 0.5 * stationary * rng.uniform();
        let t = 1 + (rng.uniform() * 1e4) as u64;
        let st = OptimizerState::from_parts(Method::Adam, w1(0.0), w1(v), t).unwrap();
        max_delayed = max_delayed.max(bias_gap(&prob, &w1(w), &st, &hp, BiasMode::Delayed).unwrap()[0].abs());
        min_adam = min_adam.min(bias_gap(&prob, &w1(w), &st, &hp, BiasMode::Adam).unwrap()[0].abs());
    }
    check(
        max_delayed <= 1e-15 && min_adam > 1e-9,
        format!("delayed max |gap| = {max_delayed:.1e} (tol 1e-15); adam min |gap| = {min_adam:.3e} (> 1e-9)"),
    )
}

// 6. Unconditional rate bound for delayed Adam and its 1/sqrt(T) law.
fn rate_bound() -> Verdict {
    let prob = SynthProblem::new(999.0, 1.0).unwrap();
    let start = w1(0.5);
    let k = prob.constants(&start).unwrap();
    let steps = 100_000u64;
    let gamma = 1e-5 / unit_gamma_alpha(&k, steps);
    let run = |t: u64| -> Vec<(f64, f64, f64, f64)> {
        let alpha = gamma * unit_gamma_alpha(&k, t);
        let hp = HyperParams::constant(alpha, 1e-8, 0.0, 0.99);
        (0..20u64)
            .into_par_iter()
            .map(|seed| {
                let rec = run_trial(&TrialConfig::new(Method::DelayedAdam, hp, t, start.clone(), seed), &prob)
                    .unwrap()
                    .record;
                let u = eval_bound(&rec, &k, BoundVariant::Unconditional).unwrap();
                let c = eval_bound(&rec, &k, BoundVariant::Conditional).unwrap();
                (u.lhs, u.rhs, c.lhs, c.rhs)
            })
            .collect()
    };
    let short = run(steps);
    let long = run(4 * steps);
    let mean = |v: &[(f64, f64, f64, f64)], f: fn(&(f64, f64, f64, f64)) -> f64| {
        v.iter().map(f).sum::<f64>() / v.len() as f64
    };
    let lhs = mean(&short, |x| x.0);
    let rhs = mean(&short, |x| x.1);
    let ratio = mean(&long, |x| x.1) / rhs;
    let holds = lhs <= rhs;
    let sqrt_law = (ratio - 0.5).abs() <= 0.5 * 0.05;
    check(
        holds && sqrt_law,
        format!(
            "unconditional mean lhs={lhs:.4e} rhs={rhs:.4e} rhs/lhs={:.3e}; rhs(4T)/rhs(T)={ratio:.6} (0.5 +- 5%); \
             conditional (reported) lhs={:.4e} rhs={:.4e}",
            rhs / lhs,
            mean(&short, |x| x.2),
            mean(&short, |x| x.3)
        ),
    )
}

// 7. Central-difference gradient checks.
fn gradient_correctness() -> Verdict {
    let mut rng = RngStream::new(7);
    let curv = Vector::new((0..5).map(|i| 1.0 + i as f64).collect()).unwrap();
    let quad = QuadraticProblem::random(curv, 0.3, &mut rng).unwrap();
    let train = gaussian_blobs(20, 3, 4, 3.0, &mut rng).unwrap();
    let mlp = MlpProblem::new(4, 6, 3, train).unwrap().with_batch_size(8).unwrap();
    let random_point = |d: usize, rng: &mut RngStream| {
        let raw: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        let radius = rng.uniform();
        Vector::new(raw.iter().map(|x| x * radius / norm).collect()).unwrap()
    };
    let (mut q_err, mut m_err) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let w = Vector::new((0..5).map(|_| rng.normal(0.0, 2.0)).collect()).unwrap();
        let tok = quad.sample(&mut rng);
        q_err = q_err.max(fd_check(&quad, &w, &tok, 1e-5).unwrap());
        let w = random_point(mlp.dim(), &mut rng);
        let tok = mlp.sample(&mut rng);
        m_err = m_err.max(fd_check(&mlp, &w, &tok, 1e-5).unwrap());
    }
    check(
        q_err <= 1e-7 && m_err <= 1e-5,
        format!("quadratic max rel err {q_err:.2e} (tol 1e-7); mlp {m_err:.2e} (tol 1e-5)"),
    )
}

fn heatmap_bytes(cells: &[avagrad_core::sweep::HeatmapCell], dir: &Path, name: &str) -> Vec<u8> {
    let path = dir.join(name);
    export_heatmap(cells, &path).unwrap();
    std::fs::read(path).unwrap()
}

// 8. Grid construction, sweep completeness, schema and scheduling independence.
fn grid_protocol() -> Verdict {
    let (alphas, epsilons) = default_grid();
    let grid_ok = alphas.len() == 21
        && epsilons.len() == 21
        && alphas.first() == Some(&5e-7)
        && alphas.last() == Some(&5e3)
        && epsilons.first() == Some(&1e-8)
        && epsilons.last() == Some(&1e2)
        && alphas.len() * epsilons.len() == 441;

    let dir = tempfile::tempdir().unwrap();
    let mut rng = RngStream::new(8);
    let quad = QuadraticProblem::random(
        Vector::new((0..10).map(|i| 1.0 + i as f64).collect()).unwrap(),
        0.1,
        &mut rng,
    )
    .unwrap();
    let small = GridSpec {
        methods: vec![Method::Adam, Method::AvaGrad],
        alphas: vec![1e-3, 1e-2, 1e-1],
        epsilons: vec![1e-8, 1e-3, 1.0],
        seeds: vec![0, 1],
        base_seed: 8,
        steps: 200,
        w1: None,
        base: HyperParams::constant(1e-3, 1e-8, 0.9, 0.999),
    };
    let small_cells = run_sweep(&small, &quad, 2, false).unwrap();
    let bytes = heatmap_bytes(&small_cells, dir.path(), "small.csv");
    let text = String::from_utf8(bytes).unwrap();
    let mut lines = text.lines();
    let schema_ok = lines.next() == Some(HEATMAP_HEADER.join(",").as_str())
        && lines.clone().count() == 36
        && lines.all(|l| l.split(',').count() == 6);

    let full = GridSpec {
        methods: vec![Method::AvaGrad],
        alphas: default_alphas(),
        epsilons: default_epsilons(),
        seeds: vec![0],
        base_seed: 8,
        steps: 1000,
        w1: None,
        base: HyperParams::constant(1e-3, 1e-8, 0.9, 0.999),
    };
    let started = std::time::Instant::now();
    let one = run_sweep(&full, &quad, 1, false).unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    let eight = run_sweep(&full, &quad, 8, false).unwrap();
    let identical = heatmap_bytes(&one, dir.path(), "w1.csv") == heatmap_bytes(&eight, dir.path(), "w8.csv");
    check(
        grid_ok && schema_ok && one.len() == 441 && identical,
        format!(
            "grid 21x21 {}; 36-cell sweep schema {}; default-grid sweep {} cells in {elapsed:.1}s; workers 1 vs 8 identical: {identical}",
            ok(grid_ok),
            ok(schema_ok),
            one.len()
        ),
    )
}

// 9. AvaGrad's best alpha moves less with epsilon than Adam's.
fn decoupling() -> Verdict {
    let mut rng = RngStream::new(0);
    let train = gaussian_blobs(100, 3, 2, 3.0, &mut rng).unwrap();
    let holdout = gaussian_blobs(100, 3, 2, 3.0, &mut rng).unwrap();
    let mlp = MlpProblem::new(2, 8, 3, train)
        .unwrap()
        .with_batch_size(16)
        .unwrap()
        .with_holdout(holdout)
        .unwrap();
    let spec = GridSpec {
        methods: vec![Method::Adam, Method::AvaGrad],
        alphas: subgrid(&default_alphas(), 2, 3),
        epsilons: subgrid(&default_epsilons(), 2, 3),
        seeds: vec![0, 1, 2],
        base_seed: 0,
        steps: 2000,
        w1: None,
        base: HyperParams::constant(1e-3, 1e-8, 0.9, 0.999),
    };
    let cells = run_sweep(&spec, &mlp, workers(), false).unwrap();
    let adam = separability_index(&cells, Method::Adam).unwrap();
    let ava = separability_index(&cells, Method::AvaGrad).unwrap();
    check(
        ava > adam,
        format!("7x7 grid, 3 seeds, T=2000: separability avagrad={ava:.3} adam={adam:.3}"),
    )
}

fn lab(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_avagrad-lab"))
        .args(args)
        .current_dir(dir)
        .env_remove("AVAGRAD_LAB_SEED")
        .output()
        .unwrap()
}

// 10. Byte-identical artifacts across repeated runs.
fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("sweep.toml"),
        "[problem]\nkind = \"quadratic\"\ndim = 4\ncondition = 10.0\n\n[run]\nsteps = 300\nreplicates = 2\nseed = 11\n\n\
         [grid]\nalphas = [1e-3, 1e-2, 1e-1]\nepsilons = [1e-8, 1e-2, 1.0]\nmethods = [\"adam\", \"avagrad\"]\n",
    )
    .unwrap();
    let mut same = true;
    let mut statuses = Vec::new();
    for run in ["a", "b"] {
        let out = lab(&["synthfig", "--out", run, "--steps", "20000", "--seeds", "2", "--seed", "11"], d);
        statuses.push(out.status.code());
        let out = lab(&["sweep", "--config", "sweep.toml", "--out", run, "--workers", "2"], d);
        statuses.push(out.status.code());
    }
    for f in ["fig1_left.csv", "fig1_right.csv", "heatmap.csv", "separability.csv"] {
        let a = std::fs::read(d.join("a").join(f)).unwrap_or_default();
        let b = std::fs::read(d.join("b").join(f)).unwrap_or_else(|_| vec![1]);
        same &= !a.is_empty() && a == b;
    }
    let exits_ok = statuses.iter().all(|&s| s == Some(0));
    check(
        same && exits_ok,
        format!("synthfig and sweep artifacts identical across runs: {same}; exit codes {statuses:?}"),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 10] = [
        ("synthetic divergence and convergence", synthetic_divergence),
        ("step oracle equivalence", step_oracle),
        ("avagrad one-dimensional reduction", avagrad_reduction),
        ("normalization scale invariance", normalization_invariance),
        ("bias diagnostic", bias_diagnostic),
        ("unconditional rate bound", rate_bound),
        ("gradient correctness", gradient_correctness),
        ("grid protocol fidelity", grid_protocol),
        ("alpha-epsilon decoupling", decoupling),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let label = format!("criterion {:>2}: {name}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| label.contains(f.as_str())) {
            continue;
        }
        let verdict = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match verdict {
            Ok(detail) => println!("PASS {label} | {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {label} | {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
