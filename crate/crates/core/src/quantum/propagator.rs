//! Strang-split spectral propagation of the time-dependent Schrodinger equation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, Spectral, WaveFunction};
use crate::hamiltonian::HamiltonianSpec;
use crate::units::HBAR;

/// Fraction of probability tolerated near the lattice ends before evolution aborts.
pub const EDGE_MASS_LIMIT: f64 = 1e-3;

/// Steps between edge diagnostics.
const EDGE_CHECK_INTERVAL: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitScheme {
    #[default]
    StrangSplit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagatorConfig {
    pub dt: f64,
    #[serde(default = "default_steps_per_output")]
    pub steps_per_output: usize,
    #[serde(default)]
    pub scheme: SplitScheme,
    /// Width used by the edge diagnostic (3 widths from each end).
    #[serde(default)]
    pub edge_width: Option<f64>,
}

fn default_steps_per_output() -> usize {
    1
}

impl PropagatorConfig {
    pub fn new(dt: f64) -> Self {
        Self { dt, steps_per_output: 1, scheme: SplitScheme::StrangSplit, edge_width: None }
    }

    pub fn with_edge_width(mut self, sigma_x: f64) -> Self {
        self.edge_width = Some(sigma_x);
        self
    }

    /// `p_nyquist^2 / 2m + max |V|` on the lattice.
    pub fn max_energy(grid: &Grid, spec: &HamiltonianSpec) -> f64 {
        let pn = grid.p_nyquist();
        let vmax = (0..grid.n).map(|k| spec.potential(grid.x(k)).abs()).fold(0.0, f64::max);
        pn * pn / (2.0 * spec.mass) + vmax
    }

    /// Largest step allowed by the guard `dt * E_max / hbar < 0.5`.
    pub fn max_stable_dt(grid: &Grid, spec: &HamiltonianSpec) -> f64 {
        0.5 * HBAR / Self::max_energy(grid, spec)
    }

    pub fn validate(&self, grid: &Grid, spec: &HamiltonianSpec) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::param("dt", "must be positive and finite"));
        }
        if self.steps_per_output == 0 {
            return Err(Error::param("steps_per_output", "must be at least 1"));
        }
        let ratio = self.dt * Self::max_energy(grid, spec) / HBAR;
        if ratio >= 0.5 {
            return Err(Error::Stability { ratio, max_dt: Self::max_stable_dt(grid, spec) });
        }
        Ok(())
    }
}

/// Precomputed split-step factors for one lattice, Hamiltonian and step.
#[derive(Debug, Clone)]
pub struct Propagator {
    grid: Grid,
    spectral: Spectral,
    potential: Vec<f64>,
    kinetic: Vec<f64>,
    config: PropagatorConfig,
}

impl Propagator {
    pub fn new(grid: Grid, spec: &HamiltonianSpec, config: PropagatorConfig) -> Result<Self> {
        spec.validate()?;
        config.validate(&grid, spec)?;
        let potential: Vec<f64> = (0..grid.n).map(|k| spec.potential(grid.x(k))).collect();
        if potential.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("potential on the lattice"));
        }
        let kinetic = (0..grid.n).map(|m| spec.kinetic(grid.momentum(m))).collect();
        Ok(Self { grid, spectral: Spectral::new(grid.n), potential, kinetic, config })
    }

    pub fn config(&self) -> &PropagatorConfig {
        &self.config
    }

    /// Evolves by `t` using `ceil(t / dt)` equal steps.
    pub fn evolve(&self, psi: &WaveFunction, t: f64) -> Result<WaveFunction> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::param("t", "must be non-negative and finite"));
        }
        if *psi.grid() != self.grid {
            return Err(Error::param("grid", "state lives on a different lattice"));
        }
        if t == 0.0 {
            return Ok(psi.clone());
        }
        let steps = (t / self.config.dt).ceil().max(1.0) as usize;
        let h = t / steps as f64;
        let half_v: Vec<Complex64> =
            self.potential.iter().map(|v| Complex64::from_polar(1.0, -v * h / (2.0 * HBAR))).collect();
        let full_v: Vec<Complex64> = half_v.iter().map(|z| z * z).collect();
        let kin: Vec<Complex64> =
            self.kinetic.iter().map(|e| Complex64::from_polar(1.0, -e * h / HBAR)).collect();

        let mut out = psi.clone();
        let a = out.amplitudes_mut();
        mul_assign(a, &half_v);
        for step in 0..steps {
            self.spectral.forward(a);
            mul_assign(a, &kin);
            self.spectral.inverse(a);
            if step + 1 < steps {
                mul_assign(a, &full_v);
            }
            if (step + 1) % EDGE_CHECK_INTERVAL == 0 {
                self.check_edges(a)?;
            }
        }
        mul_assign(a, &half_v);
        self.check_edges(a)?;
        Ok(out)
    }

    /// States at each of the given increasing times.
    pub fn evolve_series(&self, psi: &WaveFunction, times: &[f64]) -> Result<Vec<WaveFunction>> {
        let mut out = Vec::with_capacity(times.len());
        let mut current = psi.clone();
        let mut now = 0.0;
        for &t in times {
            if t < now {
                return Err(Error::param("times", "output times must be non-decreasing"));
            }
            current = self.evolve(&current, t - now)?;
            now = t;
            out.push(current.clone());
        }
        Ok(out)
    }

    fn check_edges(&self, a: &[Complex64]) -> Result<()> {
        let Some(width) = self.config.edge_width else {
            return Ok(());
        };
        let g = &self.grid;
        let band = 3.0 * width;
        let dx = g.dx();
        let mut low = 0.0;
        let mut high = 0.0;
        for (k, z) in a.iter().enumerate() {
            let x = g.x(k);
            if x < g.x_min + band {
                low += z.norm_sqr() * dx;
            } else if x > g.x_max - band {
                high += z.norm_sqr() * dx;
            }
        }
        if low > EDGE_MASS_LIMIT {
            return Err(Error::BoundaryReached { mass: low, edge: "lower position" });
        }
        if high > EDGE_MASS_LIMIT {
            return Err(Error::BoundaryReached { mass: high, edge: "upper position" });
        }
        let mut buf = a.to_vec();
        self.spectral.forward(&mut buf);
        let s = dx / g.n as f64;
        let p_band = 3.0 * HBAR / (2.0 * width);
        let pn = g.p_nyquist();
        let edge: f64 = buf
            .iter()
            .enumerate()
            .filter(|(m, _)| g.momentum(*m).abs() > pn - p_band)
            .map(|(_, z)| z.norm_sqr() * s)
            .sum();
        if edge > EDGE_MASS_LIMIT {
            return Err(Error::BoundaryReached { mass: edge, edge: "momentum band" });
        }
        Ok(())
    }
}

fn mul_assign(a: &mut [Complex64], f: &[Complex64]) {
    a.iter_mut().zip(f).for_each(|(z, w)| *z *= w);
}

/// One-shot evolution.
pub fn evolve(
    psi: &WaveFunction,
    spec: &HamiltonianSpec,
    cfg: PropagatorConfig,
    t: f64,
) -> Result<WaveFunction> {
    Propagator::new(*psi.grid(), spec, cfg)?.evolve(psi, t)
}

/// `<psi| H |psi>` with the kinetic term evaluated spectrally.
pub fn energy(psi: &WaveFunction, spec: &HamiltonianSpec) -> f64 {
    let g = psi.grid();
    let spectral = Spectral::new(g.n);
    let kin: f64 = psi
        .momentum_probabilities(&spectral)
        .iter()
        .enumerate()
        .map(|(m, w)| w * spec.kinetic(g.momentum(m)))
        .sum();
    let pot: f64 =
        psi.amplitudes().iter().enumerate().map(|(k, z)| z.norm_sqr() * spec.potential(g.x(k))).sum::<f64>()
            * g.dx();
    kin + pot
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherent::{coherent_state, CoherentStateParams};
    use std::f64::consts::PI;

    #[test]
    fn free_packet_spreads_as_predicted() {
        let g = Grid::new(-60.0, 60.0, 1024).unwrap();
        let spec = HamiltonianSpec::free(1.0).unwrap();
        let psi = coherent_state(CoherentStateParams::new(-10.0, 1.0, 1.0).unwrap(), g).unwrap();
        let cfg = PropagatorConfig::new(1e-3);
        let t = 6.0;
        let out = evolve(&psi, &spec, cfg, t).unwrap();
        let expected = 1.0 + (HBAR * t / 2.0).powi(2);
        assert!((out.variance_x() / expected - 1.0).abs() < 1e-4);
        assert!((out.expectation_x() + 4.0).abs() < 1e-6);
    }

    #[test]
    fn harmonic_revival_after_one_period() {
        let g = Grid::new(-20.0, 20.0, 512).unwrap();
        let omega = 1.0;
        let spec = HamiltonianSpec::harmonic(1.0, omega).unwrap();
        let psi = coherent_state(CoherentStateParams::new(3.0, 1.0, (0.5f64).sqrt()).unwrap(), g).unwrap();
        let cfg = PropagatorConfig::new(2e-4);
        let out = evolve(&psi, &spec, cfg, 2.0 * PI / omega).unwrap();
        assert!((psi.inner(&out).unwrap().norm() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn unitarity_energy_and_composition() {
        let g = Grid::new(-20.0, 20.0, 128).unwrap();
        let spec = HamiltonianSpec::new(1.0, vec![(2, 0.5), (4, 0.001)]).unwrap();
        let psi = coherent_state(CoherentStateParams::new(1.0, 0.5, 1.0).unwrap(), g).unwrap();
        let dt = 1e-3;
        let prop = Propagator::new(g, &spec, PropagatorConfig::new(dt)).unwrap();
        let long = prop.evolve(&psi, 1e4 * dt).unwrap();
        assert!((long.norm() - 1.0).abs() < 1e-9);
        let e0 = energy(&psi, &spec);
        assert!((energy(&long, &spec) / e0 - 1.0).abs() < 1e-6);

        let a = prop.evolve(&prop.evolve(&psi, 300.0 * dt).unwrap(), 500.0 * dt).unwrap();
        let b = prop.evolve(&psi, 800.0 * dt).unwrap();
        assert!(a.distance(&b).unwrap() < 1e-8);
        assert_eq!(prop.evolve(&psi, 0.0).unwrap(), psi);
    }

    #[test]
    fn guards() {
        let g = Grid::new(-20.0, 20.0, 256).unwrap();
        let spec = HamiltonianSpec::free(1.0).unwrap();
        let max = PropagatorConfig::max_stable_dt(&g, &spec);
        assert!(matches!(
            Propagator::new(g, &spec, PropagatorConfig::new(1.1 * max)),
            Err(Error::Stability { .. })
        ));
        let psi = coherent_state(CoherentStateParams::new(10.0, 4.0, 1.0).unwrap(), g).unwrap();
        let cfg = PropagatorConfig::new(0.5 * max).with_edge_width(1.0);
        assert!(matches!(evolve(&psi, &spec, cfg, 3.0), Err(Error::BoundaryReached { .. })));
    }
}
