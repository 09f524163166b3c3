#![allow(clippy::needless_range_loop)]

//! Scalar reference optimizers written directly from the update equations,
//! sharing no code with the library.

#![allow(dead_code)]

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decay {
    None,
    Coupled,
    Decoupled,
}

#[derive(Debug, Clone)]
pub struct RefOpt {
    pub name: &'static str,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub vhat: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RefStep {
    pub w: Vec<f64>,
    pub eta: Vec<f64>,
    pub alpha_eff: f64,
}

impl RefOpt {
    pub fn new(name: &'static str, d: usize) -> Self {
        Self {
            name,
            m: vec![0.0; d],
            v: vec![0.0; d],
            vhat: vec![0.0; d],
        }
    }

    /// One update with already-evaluated `alpha_t`, `beta1_t`, `beta2_t`.
    #[allow(clippy::too_many_arguments)]
    pub fn step(
        &mut self,
        w: &[f64],
        g: &[f64],
        alpha: f64,
        b1: f64,
        b2: f64,
        eps: f64,
        lambda: f64,
        decay: Decay,
    ) -> RefStep {
        let d = w.len();
        let decay = match self.name {
            "adamw" | "avagradw" => Decay::Decoupled,
            _ => decay,
        };
        let mut gg = g.to_vec();
        if decay == Decay::Coupled {
            for i in 0..d {
                gg[i] = g[i] + lambda * w[i];
            }
        }
        let v_prev = self.v.clone();
        let adaptive = !matches!(self.name, "sgd" | "momentum_sgd");
        for i in 0..d {
            if self.name != "sgd" {
                self.m[i] = b1 * self.m[i] + (1.0 - b1) * gg[i];
            }
            if adaptive {
                self.v[i] = b2 * self.v[i] + (1.0 - b2) * gg[i] * gg[i];
                self.vhat[i] = self.vhat[i].max(self.v[i]);
            }
        }
        let mut eta = vec![1.0; d];
        let mut dir = self.m.clone();
        let mut alpha_eff = alpha;
        match self.name {
            "sgd" => dir = gg.clone(),
            "momentum_sgd" => {}
            "adam" | "adamw" => {
                for i in 0..d {
                    eta[i] = 1.0 / (self.v[i].sqrt() + eps);
                }
            }
            "amsgrad" => {
                for i in 0..d {
                    eta[i] = 1.0 / (self.vhat[i].sqrt() + eps);
                }
            }
            "delayed_adam" | "avagrad" | "avagradw" => {
                for i in 0..d {
                    eta[i] = 1.0 / (v_prev[i].sqrt() + eps);
                }
            }
            other => panic!("unknown method {other}"),
        }
        let mut scale = 1.0;
        if self.name.starts_with("avagrad") {
            let sq: f64 = eta.iter().map(|e| e * e).sum();
            scale = (sq / d as f64).sqrt();
            alpha_eff = alpha / scale;
        }
        let mut out = vec![0.0; d];
        for i in 0..d {
            out[i] = w[i] - alpha * (eta[i] / scale) * dir[i];
            if decay == Decay::Decoupled {
                out[i] -= alpha * lambda * w[i];
            }
        }
        RefStep { w: out, eta, alpha_eff }
    }
}
