//! Quantum versus classical slot distributions over time.

use serde::{Deserialize, Serialize};

use crate::coherent::{coherent_state, sigma_p, CoherentStateParams};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::hamiltonian::HamiltonianSpec;
use crate::liouville::{coherent_husimi, pushforward_series, total_variation, PushforwardConfig};
use crate::quantum::{slot_probabilities, Propagator, PropagatorConfig};
use crate::slots::{SlotPartition, SlotWindow};

/// Total-variation distances at increasing times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvSeries {
    pub times: Vec<f64>,
    pub tv: Vec<f64>,
}

impl TvSeries {
    /// First sampled time with `tv > threshold`.
    pub fn first_crossing(&self, threshold: f64) -> Option<f64> {
        self.times.iter().zip(&self.tv).find(|(_, &v)| v > threshold).map(|(&t, _)| t)
    }

    pub fn max(&self) -> f64 {
        self.tv.iter().copied().fold(0.0, f64::max)
    }
}

/// Settings of a coherent-state comparison run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub propagator: PropagatorConfig,
    /// RK4 step of the classical characteristics.
    pub classical_dt: f64,
    /// Push-forward cells per Husimi width.
    pub cells_per_width: usize,
    /// Husimi widths covered on each side of the initial centre.
    pub half_widths: f64,
}

impl CompareConfig {
    pub fn new(propagator: PropagatorConfig, classical_dt: f64) -> Self {
        Self { propagator, classical_dt, cells_per_width: 20, half_widths: 7.0 }
    }
}

/// TV between the slot distribution of the evolved coherent state and the
/// Liouville transport of its initial Husimi function, at each of `times`.
/// The classical mass leaving `window` counts against the distance.
pub fn coherent_tv_series(
    state: CoherentStateParams,
    grid: Grid,
    spec: &HamiltonianSpec,
    part: &SlotPartition,
    window: SlotWindow,
    times: &[f64],
    cfg: &CompareConfig,
) -> Result<TvSeries> {
    if times.is_empty() {
        return Err(Error::param("times", "must not be empty"));
    }
    let psi0 = coherent_state(state, grid)?;
    let sx = state.sigma_x;
    let sp = sigma_p(sx);
    let width = std::f64::consts::SQRT_2;
    let pf = PushforwardConfig::gaussian(
        cfg.classical_dt,
        (state.x0, state.p0),
        (width * sx, width * sp),
        cfg.half_widths,
        cfg.cells_per_width,
    );
    let classical = pushforward_series(coherent_husimi(state.x0, state.p0, sx), spec, part, window, times, &pf)?;
    let prop = Propagator::new(grid, spec, cfg.propagator)?;
    let states = prop.evolve_series(&psi0, times)?;
    let tv = states
        .iter()
        .zip(&classical)
        .map(|(psi, cl)| total_variation(&slot_probabilities(psi, part, sx)?, cl))
        .collect::<Result<Vec<_>>>()?;
    Ok(TvSeries { times: times.to_vec(), tv })
}
