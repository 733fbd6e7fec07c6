//! Slot-sum approximation of phase-space integrals.
//!
//! A density `P(x, p)` sampled once per slot and weighted by the slot area
//! approximates `int int P` with an error of order `1/n + 1/m` for `n x m`
//! slots over the support, as long as `P` does not vanish at the edges.

use crate::error::{Error, Result};
use crate::operator_lab::Rect;

/// `sum_ij P(x_i, p_j) dx dp` with `(x_i, p_j)` the lower-left slot corners
/// of an `n x m` tiling of `rect`.
pub fn slot_sum(rect: &Rect, n: usize, m: usize, density: impl Fn(f64, f64) -> f64) -> Result<f64> {
    if n == 0 || m == 0 {
        return Err(Error::param("slot count", "must be positive"));
    }
    let hx = (rect.x_hi - rect.x_lo) / n as f64;
    let hp = (rect.p_hi - rect.p_lo) / m as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let x = rect.x_lo + i as f64 * hx;
        for j in 0..m {
            acc += density(x, rect.p_lo + j as f64 * hp);
        }
    }
    Ok(acc * hx * hp)
}

/// Least-squares slope of `log |error|` against `log(slots per side)`,
/// negated so that first-order convergence gives 1.
pub fn convergence_exponent(counts: &[usize], errors: &[f64]) -> Result<f64> {
    if counts.len() != errors.len() {
        return Err(Error::LengthMismatch(counts.len(), errors.len()));
    }
    if counts.len() < 2 {
        return Err(Error::param("counts", "need at least two refinements"));
    }
    let xs: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.abs().ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(-sxy / sxx)
}
