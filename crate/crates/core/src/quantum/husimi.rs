//! Husimi function of lattice states and slot integration of it.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coherent::sigma_p;
use crate::error::{Error, Result};
use crate::grid::WaveFunction;
use crate::quadrature::{CompositeRule, PanelScheme};
use crate::slots::{Slot, SlotPartition};
use crate::units::HBAR;

/// Values below this are rounding noise and are clamped to zero.
const NEGATIVE_TOL: f64 = 1e-12;

/// Coherent-state support (in widths) kept when projecting onto `|x p>`.
const SUPPORT_WIDTHS: f64 = 10.0;

/// Regular phase-space sample lattice; samples sit at `x_min + a * x_step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HusimiLattice {
    pub x_min: f64,
    pub x_step: f64,
    pub nx: usize,
    pub p_min: f64,
    pub p_step: f64,
    pub np: usize,
}

impl HusimiLattice {
    pub fn new(x_min: f64, x_step: f64, nx: usize, p_min: f64, p_step: f64, np: usize) -> Result<Self> {
        let l = Self { x_min, x_step, nx, p_min, p_step, np };
        if ![x_min, x_step, p_min, p_step].iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("husimi lattice"));
        }
        if x_step <= 0.0 || p_step <= 0.0 || nx == 0 || np == 0 {
            return Err(Error::param("lattice", "steps and counts must be positive"));
        }
        Ok(l)
    }

    /// Cell-centered lattice covering `[x_lo, x_hi) x [p_lo, p_hi)`.
    pub fn covering(x_lo: f64, x_hi: f64, nx: usize, p_lo: f64, p_hi: f64, np: usize) -> Result<Self> {
        let xs = (x_hi - x_lo) / nx as f64;
        let ps = (p_hi - p_lo) / np as f64;
        Self::new(x_lo + 0.5 * xs, xs, nx, p_lo + 0.5 * ps, ps, np)
    }

    pub fn x(&self, a: usize) -> f64 {
        self.x_min + a as f64 * self.x_step
    }

    pub fn p(&self, b: usize) -> f64 {
        self.p_min + b as f64 * self.p_step
    }

    pub fn cell_area(&self) -> f64 {
        self.x_step * self.p_step
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HusimiField {
    pub lattice: HusimiLattice,
    /// Row-major in `x`: `values[a * np + b]`.
    pub values: Vec<f64>,
}

impl HusimiField {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.lattice.np + b]
    }

    pub fn riemann_sum(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.lattice.cell_area()
    }

    /// Phase-space location of the largest sample.
    pub fn peak(&self) -> (f64, f64) {
        let (idx, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc });
        let np = self.lattice.np;
        (self.lattice.x(idx / np), self.lattice.p(idx % np))
    }
}

/// Evaluates `Q(x, p) = |<x p|psi>|^2 / (2 pi hbar)` at arbitrary points.
#[derive(Debug, Clone)]
pub struct HusimiEvaluator<'a> {
    psi: &'a WaveFunction,
    sigma_x: f64,
    norm: f64,
    half_support: usize,
}

impl<'a> HusimiEvaluator<'a> {
    pub fn new(psi: &'a WaveFunction, sigma_x: f64) -> Result<Self> {
        if !(sigma_x.is_finite() && sigma_x > 0.0) {
            return Err(Error::param("sigma_x", "must be positive and finite"));
        }
        let dx = psi.grid().dx();
        let half_support = ((SUPPORT_WIDTHS * 2.0 * sigma_x) / dx).ceil() as usize;
        Ok(Self { psi, sigma_x, norm: (2.0 * PI * sigma_x * sigma_x).powf(-0.25), half_support })
    }

    /// Gaussian-windowed samples around `x`: `(first index, dx * N * window * psi)`.
    fn windowed(&self, x: f64) -> (usize, Vec<Complex64>) {
        let g = self.psi.grid();
        let dx = g.dx();
        let centre = ((x - g.x_min) / dx).round() as i64;
        let lo = (centre - self.half_support as i64).max(0) as usize;
        let hi = ((centre + self.half_support as i64) as usize).min(g.n - 1);
        let amps = self.psi.amplitudes();
        let s2 = 4.0 * self.sigma_x * self.sigma_x;
        let w = (lo..=hi)
            .map(|k| {
                let d = g.x(k) - x;
                amps[k] * (dx * self.norm * (-d * d / s2).exp())
            })
            .collect();
        (lo, w)
    }

    fn project(&self, lo: usize, w: &[Complex64], p: f64) -> f64 {
        let g = self.psi.grid();
        let mut acc = Complex64::from(0.0);
        for (off, z) in w.iter().enumerate() {
            acc += z * Complex64::from_polar(1.0, -p * g.x(lo + off) / HBAR);
        }
        let q = acc.norm_sqr() / (2.0 * PI * HBAR);
        if q < NEGATIVE_TOL {
            q.max(0.0)
        } else {
            q
        }
    }

    pub fn at(&self, x: f64, p: f64) -> f64 {
        let (lo, w) = self.windowed(x);
        self.project(lo, &w, p)
    }

    /// `Q(x, p)` for one `x` and many `p`.
    pub fn column(&self, x: f64, ps: &[f64]) -> Vec<f64> {
        let (lo, w) = self.windowed(x);
        ps.iter().map(|&p| self.project(lo, &w, p)).collect()
    }
}

pub fn husimi(psi: &WaveFunction, sigma_x: f64, lattice: HusimiLattice) -> Result<HusimiField> {
    let eval = HusimiEvaluator::new(psi, sigma_x)?;
    let g = psi.grid();
    let (xa, xb) = (lattice.x(0), lattice.x(lattice.nx - 1));
    if xa < g.x_min || xb > g.x_max {
        log::warn!("husimi lattice [{xa}, {xb}] extends beyond the grid [{}, {})", g.x_min, g.x_max);
    }
    let ps: Vec<f64> = (0..lattice.np).map(|b| lattice.p(b)).collect();
    let values = (0..lattice.nx)
        .into_par_iter()
        .flat_map_iter(|a| eval.column(lattice.x(a), &ps))
        .collect();
    Ok(HusimiField { lattice, values })
}

/// `int int_slot Q dx dp` by composite Gauss-Legendre with panels no wider than
/// half a coherent-state width in each direction.
pub fn husimi_slot_probability(
    psi: &WaveFunction,
    sigma_x: f64,
    part: &SlotPartition,
    slot: Slot,
    nodes: usize,
) -> Result<f64> {
    let eval = HusimiEvaluator::new(psi, sigma_x)?;
    let (xa, xb) = part.x_bounds(slot.0);
    let (pa, pb) = part.p_bounds(slot.1);
    let rx = CompositeRule::new(xa, xb, 0.5 * sigma_x, nodes, PanelScheme::GaussLegendre)?;
    let rp = CompositeRule::new(pa, pb, 0.5 * sigma_p(sigma_x), nodes, PanelScheme::GaussLegendre)?;
    let total = rx
        .nodes
        .par_iter()
        .zip(rx.weights.par_iter())
        .map(|(&x, &wx)| {
            let col = eval.column(x, &rp.nodes);
            wx * col.iter().zip(&rp.weights).map(|(q, w)| q * w).sum::<f64>()
        })
        .sum();
    Ok(total)
}
