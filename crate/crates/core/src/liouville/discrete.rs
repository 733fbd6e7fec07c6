//! Finite-difference Poisson-bracket transport of slot probabilities.
//!
//! `d p_ij / dt = (D_x h / dx)(D_p p / dp) - (D_p h / dp)(D_x p / dx)` with
//! one-sided forward differences `D_x f_ij = f_{i+1,j} - f_ij`. Probability
//! outside the window is zero; at the upper edges of the Hamiltonian window
//! its differences fall back to backward differences.

use serde::{Deserialize, Serialize};

use super::field::ClassicalField;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeIntegrator {
    #[default]
    ForwardEuler,
    Rk4,
}

struct Coefficients {
    /// `D_x h / (dx dp)` per slot.
    ax: Vec<f64>,
    /// `D_p h / (dx dp)` per slot.
    ap: Vec<f64>,
}

fn coefficients(p: &ClassicalField, h: &ClassicalField) -> Result<Coefficients> {
    if p.partition != h.partition {
        return Err(Error::PartitionMismatch);
    }
    let (pw, hw) = (p.window, h.window);
    if pw.i_min < hw.i_min || pw.i_max > hw.i_max || pw.j_min < hw.j_min || pw.j_max > hw.j_max {
        return Err(Error::param("hamiltonian window", "must cover the probability window"));
    }
    let area = p.partition.area();
    let hv = |i: i64, j: i64| h.get((i, j)).expect("inside hamiltonian window");
    let mut ax = Vec::with_capacity(pw.len());
    let mut ap = Vec::with_capacity(pw.len());
    for (i, j) in pw.slots() {
        let dxh = if i < hw.i_max { hv(i + 1, j) - hv(i, j) } else { hv(i, j) - hv(i - 1, j) };
        let dph = if j < hw.j_max { hv(i, j + 1) - hv(i, j) } else { hv(i, j) - hv(i, j - 1) };
        ax.push(dxh / area);
        ap.push(dph / area);
    }
    Ok(Coefficients { ax, ap })
}

fn rate(p: &ClassicalField, values: &[f64], c: &Coefficients) -> Vec<f64> {
    let w = p.window;
    let at = |i: i64, j: i64| w.offset((i, j)).map_or(0.0, |k| values[k]);
    w.slots()
        .enumerate()
        .map(|(k, (i, j))| {
            let f = values[k];
            c.ax[k] * (at(i, j + 1) - f) - c.ap[k] * (at(i + 1, j) - f)
        })
        .collect()
}

/// `dt * max(|D_x h| + |D_p h|) / (dx dp)`, which must stay below 1/2.
pub fn cfl_number(p: &ClassicalField, h: &ClassicalField, dt: f64) -> Result<f64> {
    let c = coefficients(p, h)?;
    Ok(dt * c.ax.iter().zip(&c.ap).map(|(a, b)| a.abs() + b.abs()).fold(0.0, f64::max))
}

/// One explicit step of the discrete Liouville equation.
pub fn discrete_liouville_step_with(
    p: &ClassicalField,
    h: &ClassicalField,
    dt: f64,
    integrator: TimeIntegrator,
) -> Result<ClassicalField> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param("dt", "must be positive and finite"));
    }
    let c = coefficients(p, h)?;
    let speed = c.ax.iter().zip(&c.ap).map(|(a, b)| a.abs() + b.abs()).fold(0.0, f64::max);
    let ratio = dt * speed;
    if ratio >= 0.5 {
        return Err(Error::Cfl { ratio, max_dt: 0.5 / speed });
    }
    let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + s * y).collect() };
    let values = match integrator {
        TimeIntegrator::ForwardEuler => axpy(&p.values, dt, &rate(p, &p.values, &c)),
        TimeIntegrator::Rk4 => {
            let k1 = rate(p, &p.values, &c);
            let k2 = rate(p, &axpy(&p.values, 0.5 * dt, &k1), &c);
            let k3 = rate(p, &axpy(&p.values, 0.5 * dt, &k2), &c);
            let k4 = rate(p, &axpy(&p.values, dt, &k3), &c);
            p.values
                .iter()
                .enumerate()
                .map(|(k, v)| v + dt / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]))
                .collect()
        }
    };
    if values.iter().any(|v: &f64| !v.is_finite()) {
        return Err(Error::NonFinite("discrete Liouville step"));
    }
    Ok(ClassicalField { partition: p.partition, window: p.window, values, deficit: p.deficit })
}

/// Forward-Euler step.
pub fn discrete_liouville_step(p: &ClassicalField, h: &ClassicalField, dt: f64) -> Result<ClassicalField> {
    discrete_liouville_step_with(p, h, dt, TimeIntegrator::ForwardEuler)
}

/// `ceil(t / dt)` equal steps reaching exactly `t`.
pub fn discrete_liouville_evolve(
    p: &ClassicalField,
    h: &ClassicalField,
    t: f64,
    dt: f64,
    integrator: TimeIntegrator,
) -> Result<ClassicalField> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::param("t", "must be non-negative and finite"));
    }
    if t == 0.0 {
        return Ok(p.clone());
    }
    let steps = (t / dt).ceil().max(1.0) as usize;
    let h_step = t / steps as f64;
    let mut cur = p.clone();
    for _ in 0..steps {
        cur = discrete_liouville_step_with(&cur, h, h_step, integrator)?;
    }
    Ok(cur)
}
