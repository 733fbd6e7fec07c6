//! Hamilton's equations: continuum characteristics and their slot-index analogue.

use serde::{Deserialize, Serialize};

use super::field::PhasePoint;
use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianSpec;
use crate::operator_lab::Rect;
use crate::slots::{Slot, SlotPartition, SlotWindow};

fn rk4(f: impl Fn(f64, f64) -> (f64, f64), (x, p): (f64, f64), h: f64) -> (f64, f64) {
    let (a1, b1) = f(x, p);
    let (a2, b2) = f(x + 0.5 * h * a1, p + 0.5 * h * b1);
    let (a3, b3) = f(x + 0.5 * h * a2, p + 0.5 * h * b2);
    let (a4, b4) = f(x + h * a3, p + h * b3);
    (x + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4), p + h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4))
}

fn step_count(t: f64, dt: f64) -> Result<usize> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param("dt", "must be positive and finite"));
    }
    if !t.is_finite() {
        return Err(Error::NonFinite("t"));
    }
    Ok((t.abs() / dt).ceil() as usize)
}

/// Fixed-step RK4 solution of `x' = dH/dp`, `p' = -dH/dx` over time `t`
/// (negative `t` integrates backwards). Leaving `bounds` is an error.
pub fn characteristics_solve(
    spec: &HamiltonianSpec,
    start: PhasePoint,
    t: f64,
    dt: f64,
    bounds: Option<&Rect>,
) -> Result<PhasePoint> {
    let steps = step_count(t, dt)?;
    if steps == 0 {
        return Ok(start);
    }
    let h = t / steps as f64;
    let mut z = (start.x, start.p);
    for k in 0..steps {
        z = rk4(|x, p| spec.velocity(x, p), z, h);
        let out = bounds.is_some_and(|b| !(z.0 >= b.x_lo && z.0 <= b.x_hi && z.1 >= b.p_lo && z.1 <= b.p_hi));
        if out || !(z.0.is_finite() && z.1.is_finite()) {
            return Err(Error::Escaped { t: (k + 1) as f64 * h });
        }
    }
    Ok(PhasePoint::new(z.0, z.1))
}

/// When continuous slot indices are rounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnapMode {
    /// Integrate continuously; round only when reporting each observation.
    #[default]
    Observation,
    /// Restart every interval from the rounded slot of the previous observation.
    Chained,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteCharacteristicsConfig {
    /// RK4 step in time.
    pub dt: f64,
    #[serde(default)]
    pub snap: SnapMode,
    /// Observations outside this window end the sequence.
    #[serde(default)]
    pub window: Option<SlotWindow>,
}

impl DiscreteCharacteristicsConfig {
    pub fn new(dt: f64) -> Self {
        Self { dt, snap: SnapMode::Observation, window: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotSequence {
    pub slots: Vec<Slot>,
    /// True when the sequence stopped early because it left the window.
    pub truncated: bool,
}

/// Rounds half-way values toward positive infinity.
pub fn snap_index(v: f64) -> i64 {
    (v + 0.5).floor() as i64
}

/// Index-space velocity: centered slot differences of `H` at continuous
/// indices, `mu' = [H(mu, nu + 1/2) - H(mu, nu - 1/2)] / (dx dp)` and
/// `nu' = -[H(mu + 1/2, nu) - H(mu - 1/2, nu)] / (dx dp)`.
pub fn index_velocity(spec: &HamiltonianSpec, part: &SlotPartition, mu: f64, nu: f64) -> (f64, f64) {
    let x = |m: f64| part.x_origin + (m + 0.5) * part.delta_x;
    let p = |n: f64| part.p_origin + (n + 0.5) * part.delta_p;
    let area = part.area();
    let dmu = (spec.energy(x(mu), p(nu + 0.5)) - spec.energy(x(mu), p(nu - 0.5))) / area;
    let dnu = -(spec.energy(x(mu + 0.5), p(nu)) - spec.energy(x(mu - 0.5), p(nu))) / area;
    (dmu, dnu)
}

/// Slots visited at times `k tau`, `k = 0..=n`, by the slot-index Hamilton flow.
pub fn discrete_characteristics(
    start: Slot,
    spec: &HamiltonianSpec,
    part: &SlotPartition,
    tau: f64,
    n: usize,
    cfg: &DiscreteCharacteristicsConfig,
) -> Result<SlotSequence> {
    part.validate()?;
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::param("tau", "must be positive and finite"));
    }
    let steps = step_count(tau, cfg.dt)?.max(1);
    let h = tau / steps as f64;
    let mut slots = vec![start];
    let mut z = (start.0 as f64, start.1 as f64);
    for _ in 0..n {
        for _ in 0..steps {
            z = rk4(|m, v| index_velocity(spec, part, m, v), z, h);
        }
        if !(z.0.is_finite() && z.1.is_finite()) {
            return Ok(SlotSequence { slots, truncated: true });
        }
        let s = (snap_index(z.0), snap_index(z.1));
        if cfg.window.is_some_and(|w| !w.contains(s)) {
            return Ok(SlotSequence { slots, truncated: true });
        }
        slots.push(s);
        if cfg.snap == SnapMode::Chained {
            z = (s.0 as f64, s.1 as f64);
        }
    }
    Ok(SlotSequence { slots, truncated: false })
}
