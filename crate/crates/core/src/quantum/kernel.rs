//! Exact slot-operator action on lattice states.
//!
//! In the lattice basis a slot operator factorizes into
//! `P_kl = c * g(k - l) * E(k + l) * G(k - l)`: a Gaussian band `g` in the
//! offset, an error-function envelope `E` in the midpoint that carries the
//! position range, and the momentum phase integral `G`. Offsets beyond
//! `max_offset` contribute less than `1e-17` and are dropped.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, WaveFunction};
use crate::units::HBAR;

#[derive(Debug, Clone)]
pub struct SlotKernel {
    grid: Grid,
    sigma_x: f64,
    max_offset: usize,
    band: Vec<f64>,
    prefactor: f64,
}

impl SlotKernel {
    pub fn new(grid: Grid, sigma_x: f64) -> Result<Self> {
        grid.validate()?;
        if !(sigma_x.is_finite() && sigma_x > 0.0) {
            return Err(Error::param("sigma_x", "must be positive and finite"));
        }
        if sigma_x < 2.0 * grid.dx() {
            return Err(Error::Underresolved(format!(
                "sigma_x = {sigma_x} spans fewer than two lattice spacings (dx = {})",
                grid.dx()
            )));
        }
        let dx = grid.dx();
        // exp(-d^2 / 8 s^2) < 1e-17  <=>  d > s * sqrt(8 * 17 ln 10)
        let cutoff = sigma_x * (8.0 * 17.0 * std::f64::consts::LN_10).sqrt();
        let max_offset = ((cutoff / dx).ceil() as usize).min(grid.n - 1);
        let band = (0..=max_offset)
            .map(|d| {
                let r = d as f64 * dx;
                (-r * r / (8.0 * sigma_x * sigma_x)).exp()
            })
            .collect();
        let prefactor = dx / ((2.0 * PI * sigma_x * sigma_x).sqrt() * 2.0 * PI * HBAR);
        Ok(Self { grid, sigma_x, max_offset, band, prefactor })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn sigma_x(&self) -> f64 {
        self.sigma_x
    }

    pub fn max_offset(&self) -> usize {
        self.max_offset
    }

    /// `E(s) = int_a^b exp(-(x - m_s)^2 / 2 s^2) dx` at midpoints
    /// `m_s = x_min + s dx / 2`, `s = 0 .. 2n - 1`.
    pub fn envelope(&self, a: f64, b: f64) -> Vec<f64> {
        let s = self.sigma_x;
        let pref = s * (PI / 2.0).sqrt();
        let dx = self.grid.dx();
        (0..2 * self.grid.n - 1)
            .map(|idx| {
                let m = self.grid.x_min + idx as f64 * dx / 2.0;
                pref * (libm::erf((b - m) / (SQRT_2 * s)) - libm::erf((a - m) / (SQRT_2 * s)))
            })
            .collect()
    }

    /// `G(d) = int_a^b exp(i p d dx / hbar) dp` for `d = -D ..= D`, index `d + D`.
    /// The range is clipped to the lattice band.
    pub fn phase(&self, a: f64, b: f64) -> Vec<Complex64> {
        let pn = self.grid.p_nyquist();
        let (a, b) = (a.max(-pn), b.min(pn));
        let dmax = self.max_offset as i64;
        if b <= a {
            return vec![Complex64::from(0.0); 2 * self.max_offset + 1];
        }
        let width = b - a;
        let mid = 0.5 * (a + b);
        let dx = self.grid.dx();
        (-dmax..=dmax)
            .map(|d| {
                let r = d as f64 * dx / HBAR;
                let u = 0.5 * width * r;
                let sinc = if u.abs() < 1e-8 { 1.0 - u * u / 6.0 } else { u.sin() / u };
                Complex64::from_polar(width * sinc, mid * r)
            })
            .collect()
    }

    /// Lattice-integrated diagonal `A(d) = sum_k conj(psi_k) psi_{k-d} E(2k - d)`, `d = -D ..= D`.
    pub fn correlations(&self, psi: &[Complex64], envelope: &[f64]) -> Vec<Complex64> {
        let n = psi.len() as i64;
        let dmax = self.max_offset as i64;
        (-dmax..=dmax)
            .map(|d| {
                let lo = d.max(0);
                let hi = (n + d).min(n);
                let mut acc = Complex64::from(0.0);
                for k in lo..hi {
                    let l = k - d;
                    acc += psi[k as usize].conj() * psi[l as usize] * envelope[(k + l) as usize];
                }
                acc
            })
            .collect()
    }

    /// `<psi| P |psi>` from precomputed correlations and phase.
    pub fn expectation(&self, corr: &[Complex64], phase: &[Complex64]) -> f64 {
        let dmax = self.max_offset as i64;
        let dx = self.grid.dx();
        let mut acc = Complex64::from(0.0);
        for d in -dmax..=dmax {
            let idx = (d + dmax) as usize;
            acc += corr[idx] * phase[idx] * self.band[d.unsigned_abs() as usize];
        }
        acc.re * self.prefactor * dx
    }

    /// `P psi` as lattice amplitudes (not normalized).
    pub fn apply(&self, psi: &WaveFunction, envelope: &[f64], phase: &[Complex64]) -> Vec<Complex64> {
        let a = psi.amplitudes();
        let n = a.len() as i64;
        let dmax = self.max_offset as i64;
        (0..n)
            .map(|k| {
                let lo = (k - dmax).max(0);
                let hi = (k + dmax).min(n - 1);
                let mut acc = Complex64::from(0.0);
                for l in lo..=hi {
                    let d = k - l;
                    acc += a[l as usize]
                        * phase[(d + dmax) as usize]
                        * (self.band[d.unsigned_abs() as usize] * envelope[(k + l) as usize]);
                }
                acc * self.prefactor
            })
            .collect()
    }

    /// Probability of the full momentum band inside `[a, b)`:
    /// `sum_k |psi_k|^2 dx * mass of N(y_k, sigma_x) in [a, b)`.
    pub fn column_mass(&self, psi: &WaveFunction, a: f64, b: f64) -> f64 {
        let s = self.sigma_x;
        let g = &self.grid;
        psi.amplitudes()
            .iter()
            .enumerate()
            .map(|(k, z)| {
                let y = g.x(k);
                z.norm_sqr()
                    * 0.5
                    * (libm::erf((b - y) / (SQRT_2 * s)) - libm::erf((a - y) / (SQRT_2 * s)))
            })
            .sum::<f64>()
            * g.dx()
    }
}
