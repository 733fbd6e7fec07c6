//! Position lattice, its conjugate momentum lattice, and wavefunctions on it.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::HBAR;

/// Uniform periodic lattice `x_k = x_min + k*dx`, `k = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        let g = Self { x_min, x_max, n };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min.is_finite() && self.x_max.is_finite()) {
            return Err(Error::NonFinite("grid bounds"));
        }
        if self.n < 8 {
            return Err(Error::param("n", format!("need at least 8 points, got {}", self.n)));
        }
        if self.x_max <= self.x_min {
            return Err(Error::param("x_max", "must exceed x_min"));
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn dx(&self) -> f64 {
        self.length() / self.n as f64
    }

    pub fn x(&self, k: usize) -> f64 {
        self.x_min + k as f64 * self.dx()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.x(k)).collect()
    }

    /// Momentum lattice spacing `2*pi*hbar/L`.
    pub fn dp(&self) -> f64 {
        2.0 * PI * HBAR / self.length()
    }

    /// Momentum of FFT bin `m` (standard FFT ordering; bin n/2 is -p_nyquist).
    pub fn momentum(&self, m: usize) -> f64 {
        let n = self.n as i64;
        let m = m as i64;
        let signed = if m < (n + 1) / 2 { m } else { m - n };
        signed as f64 * self.dp()
    }

    pub fn momenta(&self) -> Vec<f64> {
        (0..self.n).map(|m| self.momentum(m)).collect()
    }

    /// Half-width of the momentum band, `pi*hbar/dx`.
    pub fn p_nyquist(&self) -> f64 {
        PI * HBAR / self.dx()
    }

    /// Nearest lattice index to `x` (clamped).
    pub fn index_of(&self, x: f64) -> usize {
        let k = ((x - self.x_min) / self.dx()).round();
        k.clamp(0.0, (self.n - 1) as f64) as usize
    }
}

/// Forward/inverse FFT pair for one lattice size. Forward is unnormalized,
/// inverse divides by `n`.
#[derive(Clone)]
pub struct Spectral {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("n", &self.n).finish()
    }
}

impl Spectral {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.forward.process(data);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.inverse.process(data);
        let s = 1.0 / self.n as f64;
        data.iter_mut().for_each(|z| *z *= s);
    }
}

/// Pure state sampled on a [`Grid`], normalized so that `sum |psi_k|^2 dx = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: Grid,
    amplitudes: Vec<Complex64>,
}

impl WaveFunction {
    /// Wraps amplitudes and renormalizes them.
    pub fn new(grid: Grid, amplitudes: Vec<Complex64>) -> Result<Self> {
        grid.validate()?;
        if amplitudes.len() != grid.n {
            return Err(Error::LengthMismatch(amplitudes.len(), grid.n));
        }
        if amplitudes.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("wavefunction amplitudes"));
        }
        let mut psi = Self { grid, amplitudes };
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::param("amplitudes", "zero vector cannot be normalized"));
        }
        psi.scale(1.0 / norm);
        Ok(psi)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    fn scale(&mut self, s: f64) {
        self.amplitudes.iter_mut().for_each(|z| *z *= s);
    }

    /// `sqrt(sum |psi|^2 dx)`.
    pub fn norm(&self) -> f64 {
        (self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dx()).sqrt()
    }

    /// `<self|other>` by lattice quadrature.
    pub fn inner(&self, other: &WaveFunction) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::param("grid", "inner product across different grids"));
        }
        let s: Complex64 =
            self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum();
        Ok(s * self.grid.dx())
    }

    /// `|| self - other ||` after removing the relative global phase.
    pub fn distance_up_to_phase(&self, other: &WaveFunction) -> Result<f64> {
        let ov = self.inner(other)?;
        let phase = if ov.norm() > 0.0 { ov / ov.norm() } else { Complex64::new(1.0, 0.0) };
        let d: f64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a * phase - b).norm_sqr())
            .sum();
        Ok((d * self.grid.dx()).sqrt())
    }

    /// Plain `|| self - other ||` including phase.
    pub fn distance(&self, other: &WaveFunction) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::param("grid", "distance across different grids"));
        }
        let d: f64 =
            self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| (a - b).norm_sqr()).sum();
        Ok((d * self.grid.dx()).sqrt())
    }

    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn expectation_x(&self) -> f64 {
        let dx = self.grid.dx();
        self.amplitudes.iter().enumerate().map(|(k, z)| z.norm_sqr() * self.grid.x(k)).sum::<f64>()
            * dx
            / self.norm().powi(2)
    }

    pub fn variance_x(&self) -> f64 {
        let mean = self.expectation_x();
        let dx = self.grid.dx();
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(k, z)| z.norm_sqr() * (self.grid.x(k) - mean).powi(2))
            .sum::<f64>()
            * dx
            / self.norm().powi(2)
    }

    /// Probability per FFT momentum bin (sums to the squared norm).
    pub fn momentum_probabilities(&self, spectral: &Spectral) -> Vec<f64> {
        let mut buf = self.amplitudes.clone();
        spectral.forward(&mut buf);
        let s = self.grid.dx() / self.grid.n as f64;
        buf.iter().map(|z| z.norm_sqr() * s).collect()
    }

    pub fn expectation_p(&self) -> f64 {
        let spec = Spectral::new(self.grid.n);
        let probs = self.momentum_probabilities(&spec);
        let total: f64 = probs.iter().sum();
        probs.iter().enumerate().map(|(m, w)| w * self.grid.momentum(m)).sum::<f64>() / total
    }

    pub fn variance_p(&self) -> f64 {
        let spec = Spectral::new(self.grid.n);
        let probs = self.momentum_probabilities(&spec);
        let total: f64 = probs.iter().sum();
        let mean = probs.iter().enumerate().map(|(m, w)| w * self.grid.momentum(m)).sum::<f64>()
            / total;
        probs
            .iter()
            .enumerate()
            .map(|(m, w)| w * (self.grid.momentum(m) - mean).powi(2))
            .sum::<f64>()
            / total
    }
}
