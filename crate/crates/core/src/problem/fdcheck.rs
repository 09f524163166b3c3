use super::{SampleToken, StochasticProblem};
use crate::error::{Error, Result};
use crate::vector::Vector;

const ABS_FLOOR: f64 = 1e-8;

/// Largest per-coordinate relative gap between `grad(w, token)` and a central
/// difference of `loss(·, token)` with step `h`.
///
/// The relative error of coordinate `i` is `|fd_i - g_i| / max(|fd_i|, |g_i|, 1e-8)`.
pub fn fd_check<P: StochasticProblem + ?Sized>(
    problem: &P,
    w: &Vector,
    token: &SampleToken,
    h: f64,
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidHyperParam(alloc::format!("step h must be positive, got {h}")));
    }
    let g = problem.grad(w, token)?;
    let mut probe = w.clone();
    let mut worst = 0.0f64;
    for i in 0..w.len() {
        let wi = w[i];
        probe.as_mut_slice()[i] = wi + h;
        let up = problem.loss(&probe, token)?;
        probe.as_mut_slice()[i] = wi - h;
        let down = problem.loss(&probe, token)?;
        probe.as_mut_slice()[i] = wi;
        if !up.is_finite() {
            return Err(Error::NonFinite(i));
        }
        if !down.is_finite() {
            return Err(Error::NonFinite(i));
        }
        let fd = (up - down) / (2.0 * h);
        let denom = fd.abs().max(g[i].abs()).max(ABS_FLOOR);
        worst = worst.max((fd - g[i]).abs() / denom);
    }
    Ok(worst)
}
