//! Minimum-uncertainty Gaussian wave packets `|x p>`.
//!
//! Phase convention: `psi(y) = (2 pi s^2)^(-1/4) exp(-(y - x0)^2 / 4 s^2 + i p0 y / hbar)`,
//! chosen so the lattice momentum expectation is `+p0`.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, WaveFunction};
use crate::units::HBAR;

/// Fraction of the packet's probability that must fall inside the grid.
pub const MIN_CAPTURED_MASS: f64 = 1.0 - 1e-6;

/// Margin (in widths) below which a warning is logged.
pub const RECOMMENDED_MARGIN: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentStateParams {
    pub x0: f64,
    pub p0: f64,
    pub sigma_x: f64,
}

impl CoherentStateParams {
    pub fn new(x0: f64, p0: f64, sigma_x: f64) -> Result<Self> {
        let c = Self { x0, p0, sigma_x };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x0.is_finite() && self.p0.is_finite() && self.sigma_x.is_finite()) {
            return Err(Error::NonFinite("coherent state parameters"));
        }
        if self.sigma_x <= 0.0 {
            return Err(Error::param("sigma_x", "must be positive"));
        }
        Ok(())
    }

    /// `hbar / (2 sigma_x)`.
    pub fn sigma_p(&self) -> f64 {
        sigma_p(self.sigma_x)
    }

    pub fn at(&self, x0: f64, p0: f64) -> Self {
        Self { x0, p0, ..*self }
    }

    /// Unnormalized-by-grid amplitude at `y`.
    pub fn amplitude(&self, y: f64) -> Complex64 {
        let s = self.sigma_x;
        let norm = (2.0 * PI * s * s).powf(-0.25);
        let d = y - self.x0;
        Complex64::from_polar(norm * (-d * d / (4.0 * s * s)).exp(), self.p0 * y / HBAR)
    }
}

pub fn sigma_p(sigma_x: f64) -> f64 {
    HBAR / (2.0 * sigma_x)
}

/// Probability that a normal variable with mean `mu` and width `s` lies in `[a, b]`.
pub(crate) fn normal_mass(a: f64, b: f64, mu: f64, s: f64) -> f64 {
    0.5 * (libm::erf((b - mu) / (SQRT_2 * s)) - libm::erf((a - mu) / (SQRT_2 * s)))
}

/// Samples `|x0 p0>` on the grid and renormalizes.
pub fn coherent_state(params: CoherentStateParams, grid: Grid) -> Result<WaveFunction> {
    params.validate()?;
    grid.validate()?;
    let s = params.sigma_x;
    let sp = params.sigma_p();
    let x_mass = normal_mass(grid.x_min, grid.x_max, params.x0, s);
    if x_mass < MIN_CAPTURED_MASS {
        return Err(Error::GridTooSmall(format!(
            "grid [{}, {}) holds only {:.3e} of the packet at x0 = {}",
            grid.x_min, grid.x_max, x_mass, params.x0
        )));
    }
    let pn = grid.p_nyquist();
    let p_mass = normal_mass(-pn, pn, params.p0, sp);
    if p_mass < MIN_CAPTURED_MASS {
        return Err(Error::GridTooSmall(format!(
            "momentum band +-{pn:.4} holds only {p_mass:.3e} of the packet at p0 = {}",
            params.p0
        )));
    }
    if s < grid.dx() {
        return Err(Error::GridTooSmall(format!(
            "sigma_x = {s} is below the lattice spacing {}",
            grid.dx()
        )));
    }
    let margin = ((params.x0 - grid.x_min).min(grid.x_max - params.x0)) / s;
    if margin < RECOMMENDED_MARGIN {
        log::warn!("coherent state only {margin:.2} widths from the grid edge");
    }
    let amps = (0..grid.n).map(|k| params.amplitude(grid.x(k))).collect();
    WaveFunction::new(grid, amps)
}

/// Closed-form `<a|b>` for unit-normalized packets of equal width.
pub fn overlap(a: CoherentStateParams, b: CoherentStateParams) -> Result<Complex64> {
    a.validate()?;
    b.validate()?;
    if (a.sigma_x - b.sigma_x).abs() > 1e-12 * a.sigma_x.max(b.sigma_x) {
        return Err(Error::WidthMismatch(a.sigma_x, b.sigma_x));
    }
    let s = a.sigma_x;
    let dx = b.x0 - a.x0;
    let k = (b.p0 - a.p0) / HBAR;
    let mid = 0.5 * (a.x0 + b.x0);
    let modulus = (-dx * dx / (8.0 * s * s) - k * k * s * s / 2.0).exp();
    Ok(Complex64::from_polar(modulus, k * mid))
}
