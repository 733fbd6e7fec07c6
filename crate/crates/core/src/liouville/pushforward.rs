//! Forward Liouville transport: cells of the initial density carried along
//! Hamilton's flow and binned into slots.
//!
//! Cheaper than the pull-back solver at long horizons, where transported
//! densities become filaments thinner than any fixed quadrature panel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::field::ClassicalField;
use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianSpec;
use crate::operator_lab::Rect;
use crate::slots::{SlotPartition, SlotWindow};

const ROWS_PER_CHUNK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PushforwardConfig {
    /// RK4 step for the forward characteristics.
    pub dt: f64,
    /// Box holding the initial density; mass outside it is ignored.
    pub support: Rect,
    /// Midpoint cells per direction across `support`.
    pub cells_x: usize,
    pub cells_p: usize,
}

impl PushforwardConfig {
    /// `half_widths` standard deviations of a Gaussian density centred at
    /// `(x0, p0)` with widths `(wx, wp)`, `per_width` cells per width.
    pub fn gaussian(dt: f64, (x0, p0): (f64, f64), (wx, wp): (f64, f64), half_widths: f64, per_width: usize) -> Self {
        let cells = (2.0 * half_widths).ceil() as usize * per_width;
        Self {
            dt,
            support: Rect {
                x_lo: x0 - half_widths * wx,
                x_hi: x0 + half_widths * wx,
                p_lo: p0 - half_widths * wp,
                p_hi: p0 + half_widths * wp,
            },
            cells_x: cells,
            cells_p: cells,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::param("dt", "must be positive and finite"));
        }
        let s = &self.support;
        if !(s.x_hi > s.x_lo && s.p_hi > s.p_lo) || self.cells_x == 0 || self.cells_p == 0 {
            return Err(Error::param("support", "needs positive extent and cell counts"));
        }
        Ok(())
    }
}

fn rk4(spec: &HamiltonianSpec, (x, p): (f64, f64), h: f64) -> (f64, f64) {
    let f = |x, p| spec.velocity(x, p);
    let (a1, b1) = f(x, p);
    let (a2, b2) = f(x + 0.5 * h * a1, p + 0.5 * h * b1);
    let (a3, b3) = f(x + 0.5 * h * a2, p + 0.5 * h * b2);
    let (a4, b4) = f(x + h * a3, p + h * b3);
    (x + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4), p + h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4))
}

/// Fields at each of `times` (non-negative, non-decreasing). Mass carried
/// outside `window` goes to `deficit`.
pub fn pushforward_series<F>(
    density: F,
    spec: &HamiltonianSpec,
    part: &SlotPartition,
    window: SlotWindow,
    times: &[f64],
    cfg: &PushforwardConfig,
) -> Result<Vec<ClassicalField>>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    cfg.validate()?;
    spec.validate()?;
    part.validate()?;
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("times", "must be non-negative and non-decreasing"));
    }
    let s = cfg.support;
    let hx = (s.x_hi - s.x_lo) / cfg.cells_x as f64;
    let hp = (s.p_hi - s.p_lo) / cfg.cells_p as f64;
    let len = window.len();

    let row = |a: usize| -> Vec<f64> {
        let mut acc = vec![0.0; len * times.len()];
        let x = s.x_lo + (a as f64 + 0.5) * hx;
        for b in 0..cfg.cells_p {
            let p = s.p_lo + (b as f64 + 0.5) * hp;
            let w = density(x, p) * hx * hp;
            if w == 0.0 {
                continue;
            }
            let mut z = (x, p);
            let mut now = 0.0;
            for (k, &t) in times.iter().enumerate() {
                let span = t - now;
                let steps = (span / cfg.dt).ceil() as usize;
                for _ in 0..steps {
                    z = rk4(spec, z, span / steps as f64);
                }
                now = t;
                if !(z.0.is_finite() && z.1.is_finite()) {
                    break;
                }
                if let Some(o) = window.offset((part.x_index(z.0), part.p_index(z.1))) {
                    acc[k * len + o] += w;
                }
            }
        }
        acc
    };
    // fixed chunks summed in order keep the result independent of the thread count
    let chunks: Vec<Vec<f64>> = (0..cfg.cells_x.div_ceil(ROWS_PER_CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; len * times.len()];
            for a in c * ROWS_PER_CHUNK..((c + 1) * ROWS_PER_CHUNK).min(cfg.cells_x) {
                acc.iter_mut().zip(row(a)).for_each(|(u, v)| *u += v);
            }
            acc
        })
        .collect();
    let mut sums = vec![0.0; len * times.len()];
    for c in chunks {
        sums.iter_mut().zip(c).for_each(|(u, v)| *u += v);
    }
    Ok(sums
        .chunks(len)
        .map(|values| {
            let total: f64 = values.iter().sum();
            ClassicalField { partition: *part, window, values: values.to_vec(), deficit: (1.0 - total).max(0.0) }
        })
        .collect())
}
