//! Reference Liouville transport: slot integrals of the initial density
//! pulled back along characteristics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::field::ClassicalField;
use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianSpec;
use crate::operator_lab::Rect;
use crate::quadrature::{CompositeRule, PanelScheme};
use crate::slots::{SlotPartition, SlotWindow};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiLagrangianConfig {
    /// RK4 step for the backward characteristics.
    pub dt: f64,
    /// Gauss-Legendre nodes per panel and direction.
    pub nodes: usize,
    pub max_panel_x: f64,
    pub max_panel_p: f64,
    /// Points whose pre-image leaves this box contribute zero.
    #[serde(default)]
    pub support: Option<Rect>,
}

impl SemiLagrangianConfig {
    /// Panels of one density width in each direction.
    pub fn for_widths(dt: f64, width_x: f64, width_p: f64) -> Self {
        Self { dt, nodes: 8, max_panel_x: width_x, max_panel_p: width_p, support: None }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::param("dt", "must be positive and finite"));
        }
        if self.nodes == 0 || !(self.max_panel_x > 0.0 && self.max_panel_p > 0.0) {
            return Err(Error::param("quadrature", "nodes and panel widths must be positive"));
        }
        Ok(())
    }
}

fn rk4_back(spec: &HamiltonianSpec, (x, p): (f64, f64), h: f64) -> (f64, f64) {
    let f = |x, p| spec.velocity(x, p);
    let h = -h;
    let (a1, b1) = f(x, p);
    let (a2, b2) = f(x + 0.5 * h * a1, p + 0.5 * h * b1);
    let (a3, b3) = f(x + 0.5 * h * a2, p + 0.5 * h * b2);
    let (a4, b4) = f(x + h * a3, p + h * b3);
    (x + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4), p + h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4))
}

/// Fields at each of `times` (non-negative, non-decreasing).
///
/// Each quadrature node is traced backwards once through all requested
/// times, so the cost is that of the longest horizon. `deficit` is
/// `1 - total`, meaningful for normalized densities.
pub fn semi_lagrangian_series<F>(
    density: F,
    spec: &HamiltonianSpec,
    part: &SlotPartition,
    window: SlotWindow,
    times: &[f64],
    cfg: &SemiLagrangianConfig,
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
    let slots: Vec<_> = window.slots().collect();
    let per_slot: Vec<Vec<f64>> = slots
        .par_iter()
        .map(|&(i, j)| -> Result<Vec<f64>> {
            let (xa, xb) = part.x_bounds(i);
            let (pa, pb) = part.p_bounds(j);
            let rx = CompositeRule::new(xa, xb, cfg.max_panel_x, cfg.nodes, PanelScheme::GaussLegendre)?;
            let rp = CompositeRule::new(pa, pb, cfg.max_panel_p, cfg.nodes, PanelScheme::GaussLegendre)?;
            let mut acc = vec![0.0; times.len()];
            for (&x, &wx) in rx.nodes.iter().zip(&rx.weights) {
                for (&p, &wp) in rp.nodes.iter().zip(&rp.weights) {
                    let mut z = (x, p);
                    let mut now = 0.0;
                    for (k, &t) in times.iter().enumerate() {
                        let span = t - now;
                        let steps = (span / cfg.dt).ceil() as usize;
                        for _ in 0..steps {
                            z = rk4_back(spec, z, span / steps as f64);
                        }
                        now = t;
                        let inside = cfg
                            .support
                            .is_none_or(|b| z.0 >= b.x_lo && z.0 <= b.x_hi && z.1 >= b.p_lo && z.1 <= b.p_hi);
                        if !(z.0.is_finite() && z.1.is_finite()) || !inside {
                            break;
                        }
                        acc[k] += wx * wp * density(z.0, z.1);
                    }
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    Ok((0..times.len())
        .map(|k| {
            let values: Vec<f64> = per_slot.iter().map(|v| v[k].max(0.0)).collect();
            let total: f64 = values.iter().sum();
            ClassicalField { partition: *part, window, values, deficit: (1.0 - total).max(0.0) }
        })
        .collect())
}

/// Field at a single time `t`.
pub fn semi_lagrangian_evolve<F>(
    density: F,
    spec: &HamiltonianSpec,
    part: &SlotPartition,
    window: SlotWindow,
    t: f64,
    cfg: &SemiLagrangianConfig,
) -> Result<ClassicalField>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    Ok(semi_lagrangian_series(density, spec, part, window, &[t], cfg)?.remove(0))
}

/// Husimi function of the coherent state `|x0 p0>` with width `sigma_x`:
/// a product Gaussian with widths `sqrt(2) sigma_x` and `sqrt(2) sigma_p`.
pub fn coherent_husimi(x0: f64, p0: f64, sigma_x: f64) -> impl Fn(f64, f64) -> f64 + Sync + Copy {
    let sp = crate::coherent::sigma_p(sigma_x);
    let norm = 1.0 / (2.0 * std::f64::consts::PI * crate::units::HBAR);
    move |x, p| {
        let u = (x - x0) / sigma_x;
        let v = (p - p0) / sp;
        norm * (-0.25 * (u * u + v * v)).exp()
    }
}
