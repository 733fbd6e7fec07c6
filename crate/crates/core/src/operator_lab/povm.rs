//! Matrix elements of slot operators
//! `P = (1/2 pi hbar) int_x int_p |x p><x p| dx dp` in the lattice basis.
//!
//! With `<y_k|x p> = sqrt(dx) psi_{x p}(y_k)` every element factorizes as
//! `P_kl = dx N^2 / (2 pi hbar) * G_x(k, l) * G_p(y_k - y_l)` where `G_x`
//! integrates the two Gaussian envelopes over the position range and `G_p`
//! integrates the plane-wave phase over the momentum range.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matrix::OperatorMatrix;
use crate::coherent::sigma_p;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::quadrature::{CompositeRule, PanelScheme};
use crate::slots::{SlotPartition, SlotWindow};
use crate::units::HBAR;

/// Required clearance (in `sigma_x`) between a slot and the lattice ends.
pub const EDGE_MARGIN: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureScheme {
    GaussLegendreTensor,
    MidpointTensor,
    /// Closed-form error-function and sinc integrals.
    Exact,
}

/// Discretization of the phase-space integral over a slot.
///
/// The slot is cut into panels no wider than half a coherent-state width
/// (`sigma_x / 2` along x, `sigma_p / 2` along p); each panel carries the
/// given number of nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes_per_slot_x: usize,
    pub nodes_per_slot_p: usize,
    pub scheme: QuadratureScheme,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self { nodes_per_slot_x: 8, nodes_per_slot_p: 8, scheme: QuadratureScheme::GaussLegendreTensor }
    }
}

impl QuadratureRule {
    pub fn exact() -> Self {
        Self { scheme: QuadratureScheme::Exact, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_slot_x < 4 || self.nodes_per_slot_p < 4 {
            return Err(Error::param("quadrature", "need at least 4 nodes per panel"));
        }
        Ok(())
    }

    /// Same scheme with twice the nodes.
    pub fn refined(&self) -> Self {
        Self {
            nodes_per_slot_x: 2 * self.nodes_per_slot_x,
            nodes_per_slot_p: 2 * self.nodes_per_slot_p,
            ..*self
        }
    }

    fn panel_scheme(&self) -> PanelScheme {
        match self.scheme {
            QuadratureScheme::MidpointTensor => PanelScheme::Midpoint,
            _ => PanelScheme::GaussLegendre,
        }
    }
}

/// Phase-space rectangle `[x_lo, x_hi) x [p_lo, p_hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_lo: f64,
    pub x_hi: f64,
    pub p_lo: f64,
    pub p_hi: f64,
}

impl Rect {
    pub fn slot(part: &SlotPartition, i: i64, j: i64) -> Self {
        let (x_lo, x_hi) = part.x_bounds(i);
        let (p_lo, p_hi) = part.p_bounds(j);
        Self { x_lo, x_hi, p_lo, p_hi }
    }

    pub fn window(part: &SlotPartition, w: &SlotWindow) -> Self {
        let (x_lo, _) = part.x_bounds(w.i_min);
        let (_, x_hi) = part.x_bounds(w.i_max);
        let (p_lo, _) = part.p_bounds(w.j_min);
        let (_, p_hi) = part.p_bounds(w.j_max);
        Self { x_lo, x_hi, p_lo, p_hi }
    }

    pub fn shifted_x(&self, h: f64) -> Self {
        Self { x_lo: self.x_lo + h, x_hi: self.x_hi + h, ..*self }
    }

    pub fn area(&self) -> f64 {
        (self.x_hi - self.x_lo) * (self.p_hi - self.p_lo)
    }
}

/// Builds slot operators for one lattice and one coherent-state width.
#[derive(Debug, Clone)]
pub struct PovmBuilder {
    grid: Grid,
    sigma_x: f64,
    quad: QuadratureRule,
}

impl PovmBuilder {
    pub fn new(grid: Grid, sigma_x: f64, quad: QuadratureRule) -> Result<Self> {
        grid.validate()?;
        quad.validate()?;
        if !(sigma_x.is_finite() && sigma_x > 0.0) {
            return Err(Error::param("sigma_x", "must be positive and finite"));
        }
        if sigma_x < 2.0 * grid.dx() {
            return Err(Error::Underresolved(format!(
                "sigma_x = {sigma_x} spans fewer than two lattice spacings (dx = {})",
                grid.dx()
            )));
        }
        Ok(Self { grid, sigma_x, quad })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn sigma_x(&self) -> f64 {
        self.sigma_x
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.quad
    }

    pub fn with_quadrature(&self, quad: QuadratureRule) -> Result<Self> {
        Self::new(self.grid, self.sigma_x, quad)
    }

    /// Checks that the rectangle keeps [`EDGE_MARGIN`] widths from the lattice
    /// ends and stays inside the momentum band.
    pub fn check_rect(&self, r: &Rect) -> std::result::Result<(), String> {
        let m = EDGE_MARGIN * self.sigma_x;
        if r.x_lo < self.grid.x_min + m || r.x_hi > self.grid.x_max - m {
            return Err(format!(
                "x range [{}, {}) is closer than {EDGE_MARGIN} sigma_x to the lattice [{}, {})",
                r.x_lo, r.x_hi, self.grid.x_min, self.grid.x_max
            ));
        }
        let pn = self.grid.p_nyquist() * (1.0 + 1e-9);
        if r.p_lo < -pn || r.p_hi > pn {
            return Err(format!(
                "p range [{}, {}) leaves the momentum band +-{}",
                r.p_lo,
                r.p_hi,
                self.grid.p_nyquist()
            ));
        }
        Ok(())
    }

    pub fn element(&self, part: &SlotPartition, i: i64, j: i64) -> Result<OperatorMatrix> {
        let r = Rect::slot(part, i, j);
        self.check_rect(&r).map_err(|reason| Error::SlotOutsideWindow { i, j, reason })?;
        Ok(self.rect_operator(&r))
    }

    /// Operator for an arbitrary rectangle. No window check.
    pub fn rect_operator(&self, r: &Rect) -> OperatorMatrix {
        let gx = self.position_kernel(r.x_lo, r.x_hi);
        let gp = self.momentum_kernel(r.p_lo, r.p_hi);
        self.assemble(&gx, &gp)
    }

    /// Sum of all slot operators in the window, integrated in one piece.
    pub fn window_sum(&self, part: &SlotPartition, w: &SlotWindow) -> Result<OperatorMatrix> {
        let r = Rect::window(part, w);
        self.check_rect(&r)
            .map_err(|reason| Error::SlotOutsideWindow { i: w.i_min, j: w.j_min, reason })?;
        Ok(self.rect_operator(&r))
    }

    /// Stripe operators `sum_j P_ij` (one per column) and `sum_i P_ij` (one
    /// per row) over the window, each integrated directly.
    pub fn stripes(&self, part: &SlotPartition, w: &SlotWindow) -> Result<Stripes> {
        let full = Rect::window(part, w);
        self.check_rect(&full)
            .map_err(|reason| Error::SlotOutsideWindow { i: w.i_min, j: w.j_min, reason })?;
        let gp_full = self.momentum_kernel(full.p_lo, full.p_hi);
        let gx_full = self.position_kernel(full.x_lo, full.x_hi);
        let x = (w.i_min..=w.i_max)
            .into_par_iter()
            .map(|i| {
                let (a, b) = part.x_bounds(i);
                self.assemble(&self.position_kernel(a, b), &gp_full)
            })
            .collect();
        let p = (w.j_min..=w.j_max)
            .into_par_iter()
            .map(|j| {
                let (a, b) = part.p_bounds(j);
                self.assemble(&gx_full, &self.momentum_kernel(a, b))
            })
            .collect();
        Ok(Stripes { partition: *part, window: *w, x, p })
    }

    /// `G_x(k, l) = int exp(-[(y_k - x)^2 + (y_l - x)^2] / 4 s^2) dx` over `[a, b]`.
    pub(crate) fn position_kernel(&self, a: f64, b: f64) -> DMatrix<f64> {
        let g = &self.grid;
        let n = g.n;
        let s = self.sigma_x;
        let ys = g.positions();
        match self.quad.scheme {
            QuadratureScheme::Exact => {
                let pref = s * (PI / 2.0).sqrt();
                DMatrix::from_fn(n, n, |k, l| {
                    let d = ys[k] - ys[l];
                    let env = (-d * d / (8.0 * s * s)).exp();
                    if env < 1e-300 {
                        return 0.0;
                    }
                    let m = 0.5 * (ys[k] + ys[l]);
                    env * pref
                        * (libm::erf((b - m) / (SQRT_2 * s)) - libm::erf((a - m) / (SQRT_2 * s)))
                })
            }
            _ => {
                let rule = CompositeRule::new(
                    a,
                    b,
                    0.5 * s,
                    self.quad.nodes_per_slot_x,
                    self.quad.panel_scheme(),
                )
                .expect("validated interval");
                let q = rule.len();
                let amp = DMatrix::from_fn(n, q, |k, m| {
                    let d = ys[k] - rule.nodes[m];
                    (-d * d / (4.0 * s * s)).exp()
                });
                let mut weighted = amp.clone();
                for (m, w) in rule.weights.iter().enumerate() {
                    weighted.column_mut(m).scale_mut(*w);
                }
                &weighted * amp.transpose()
            }
        }
    }

    /// `G_p(d) = int exp(i p d / hbar) dp` over `[a, b]` for lattice offsets
    /// `d = (k - l) dx`, stored at index `k - l + n - 1`.
    pub(crate) fn momentum_kernel(&self, a: f64, b: f64) -> Vec<Complex64> {
        let g = &self.grid;
        let n = g.n as i64;
        let dx = g.dx();
        let offsets = (-(n - 1)..n).map(|o| o as f64 * dx / HBAR);
        match self.quad.scheme {
            QuadratureScheme::Exact => {
                let width = b - a;
                let mid = 0.5 * (a + b);
                offsets
                    .map(|d| {
                        let u = 0.5 * width * d;
                        let sinc = if u.abs() < 1e-8 { 1.0 - u * u / 6.0 } else { u.sin() / u };
                        Complex64::from_polar(width * sinc, mid * d)
                    })
                    .collect()
            }
            _ => {
                let rule = CompositeRule::new(
                    a,
                    b,
                    0.5 * sigma_p(self.sigma_x),
                    self.quad.nodes_per_slot_p,
                    self.quad.panel_scheme(),
                )
                .expect("validated interval");
                offsets
                    .map(|d| {
                        rule.nodes
                            .iter()
                            .zip(&rule.weights)
                            .map(|(p, w)| Complex64::from_polar(*w, p * d))
                            .sum()
                    })
                    .collect()
            }
        }
    }

    pub(crate) fn assemble(&self, gx: &DMatrix<f64>, gp: &[Complex64]) -> OperatorMatrix {
        let g = self.grid;
        let n = g.n;
        let s = self.sigma_x;
        let pref = g.dx() / ((2.0 * PI * s * s).sqrt() * 2.0 * PI * HBAR);
        let entries = DMatrix::from_fn(n, n, |k, l| {
            let v = pref * gx[(k, l)];
            // flush subnormal tails; the eigen-solvers misbehave on them
            if v.abs() < 1e-200 {
                Complex64::from(0.0)
            } else {
                gp[k + n - 1 - l] * v
            }
        });
        OperatorMatrix::from_raw(g, entries)
    }
}

/// Column stripes `P_{x_i}` and row stripes `P_{p_j}` over a slot window.
#[derive(Debug, Clone)]
pub struct Stripes {
    pub partition: SlotPartition,
    pub window: SlotWindow,
    /// Indexed by `i - i_min`.
    pub x: Vec<OperatorMatrix>,
    /// Indexed by `j - j_min`.
    pub p: Vec<OperatorMatrix>,
}

impl Stripes {
    pub fn x_stripe(&self, i: i64) -> Option<&OperatorMatrix> {
        if i < self.window.i_min || i > self.window.i_max {
            return None;
        }
        self.x.get((i - self.window.i_min) as usize)
    }

    pub fn p_stripe(&self, j: i64) -> Option<&OperatorMatrix> {
        if j < self.window.j_min || j > self.window.j_max {
            return None;
        }
        self.p.get((j - self.window.j_min) as usize)
    }

    pub fn x_centers(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        (self.window.i_min..=self.window.i_max).map(|i| (i, self.partition.x_center(i)))
    }

    pub fn p_centers(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        (self.window.j_min..=self.window.j_max).map(|j| (j, self.partition.p_center(j)))
    }
}
