//! Scenario files: one TOML document per run.
//!
//! ```toml
//! name = "harmonic"
//! seed = 7
//!
//! [units]                    # optional SI scale of the simulation units
//! length = 1e-10             # metres per length unit
//! mass = 1e-27               # kilograms per mass unit
//!
//! [grid]
//! x_min = -80.0
//! x_max = 80.0
//! n = 1024
//!
//! [partition]
//! delta_x = 16.0
//! delta_p = 8.0
//! x_origin = 0.0
//! p_origin = 0.0
//!
//! [hamiltonian]              # or one or more [[mixture]] tables
//! mass = 1.0
//! potential = [[2, 0.125]]   # (power, coefficient) pairs
//!
//! [state]
//! x0 = 24.0
//! p0 = 4.0
//! sigma_x = 1.0
//!
//! [propagator]               # optional
//! dt = 5e-4                  # default: 0.9 of the stability limit
//! classical_dt = 0.01        # RK4 step of the classical reference
//!
//! [schedule]
//! times = [1.0, 2.0]         # output times of evolve and compare
//! tau = 0.196                # measurement interval
//! steps = 64                 # measurements after the preparation
//! trajectories = 100
//! ```
//!
//! Optional `[ehrenfest]` and `[sweep]` tables configure those commands.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use slotlab::quantum::{CollapseRule, PropagatorConfig};
use slotlab::trajectory::MixedChannelSpec;
use slotlab::{CoherentStateParams, Error, Grid, HamiltonianSpec, Result, SlotPartition, SlotWindow, UnitScale};

/// Fraction of the stability limit used when no step is configured.
pub const DEFAULT_DT_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units: Option<UnitsConfig>,
    pub grid: GridConfig,
    pub partition: PartitionConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<HamiltonianConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mixture: Vec<MixtureComponent>,
    pub state: StateConfig,
    #[serde(default)]
    pub propagator: PropagatorSection,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ehrenfest: Option<EhrenfestConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
}

fn default_name() -> String {
    "scenario".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitsConfig {
    pub length: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionConfig {
    pub delta_x: f64,
    pub delta_p: f64,
    #[serde(default)]
    pub x_origin: f64,
    #[serde(default)]
    pub p_origin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianConfig {
    pub mass: f64,
    #[serde(default)]
    pub potential: Vec<(u32, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mass: f64,
    #[serde(default)]
    pub potential: Vec<(u32, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    pub x0: f64,
    pub p0: f64,
    pub sigma_x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagatorSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// RK4 step of the classical reference.
    #[serde(default = "default_classical_dt")]
    pub classical_dt: f64,
}

fn default_classical_dt() -> f64 {
    0.01
}

impl Default for PropagatorSection {
    fn default() -> Self {
        Self { dt: None, classical_dt: default_classical_dt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    #[serde(default)]
    pub times: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default)]
    pub steps: usize,
    #[serde(default = "one")]
    pub trajectories: usize,
    #[serde(default)]
    pub rule: CollapseRule,
    /// Characteristics step as a fraction of `tau`.
    #[serde(default = "default_char_fraction")]
    pub characteristics_fraction: f64,
    /// TV level whose first crossing `compare` reports.
    #[serde(default = "default_threshold")]
    pub tv_threshold: f64,
}

fn one() -> usize {
    1
}

fn default_char_fraction() -> f64 {
    0.02
}

fn default_threshold() -> f64 {
    0.3
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            times: Vec::new(),
            tau: None,
            steps: 0,
            trajectories: 1,
            rule: CollapseRule::default(),
            characteristics_fraction: default_char_fraction(),
            tv_threshold: default_threshold(),
        }
    }
}

/// Which estimate `ehrenfest` reports as the headline time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimate {
    /// Slot lower bound at the slot holding the initial state.
    #[default]
    SlotBound,
    /// `m hbar / sigma_p^2` of the initial packet.
    FreePacket,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EhrenfestConfig {
    #[serde(default)]
    pub estimate: Estimate,
    /// Packet momentum width in SI units; overrides the state width.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_p_si: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collision: Option<CollisionConfig>,
}

/// Gas collisions in SI units: number density, cross section, speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollisionConfig {
    pub density: f64,
    pub cross_section: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Empty lists keep the scenario value.
    #[serde(default)]
    pub delta_x: Vec<f64>,
    #[serde(default)]
    pub delta_p: Vec<f64>,
    #[serde(default)]
    pub tau: Vec<f64>,
    /// Trajectories per grid point.
    #[serde(default = "default_sweep_trajectories")]
    pub trajectories: usize,
}

fn default_sweep_trajectories() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

/// Top-level tables every scenario needs, in reporting order.
const REQUIRED: [&str; 3] = ["grid", "partition", "state"];

fn config_err(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Config { field: field.into(), reason: reason.into() }
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.message().to_string()))?;
        for key in REQUIRED {
            if !table.contains_key(key) {
                return Err(Error::MissingField(key.into()));
            }
        }
        if !table.contains_key("hamiltonian") && !table.contains_key("mixture") {
            return Err(Error::MissingField("hamiltonian".into()));
        }
        let scenario: Scenario = toml::from_str(text).map_err(|e| describe(&e))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid().map_err(|e| config_err("grid", e.to_string()))?;
        let part = self.partition().map_err(|e| config_err("partition", e.to_string()))?;
        if let Some(u) = self.units {
            UnitScale::from_length_mass(u.length, u.mass).map_err(|e| config_err("units", e.to_string()))?;
        }
        match (&self.hamiltonian, self.mixture.is_empty()) {
            (Some(_), false) => return Err(config_err("mixture", "give either [hamiltonian] or [[mixture]], not both")),
            (Some(_), true) => {
                self.spec().map_err(|e| config_err("hamiltonian", e.to_string()))?;
            }
            (None, false) => {
                self.channel().map_err(|e| config_err("mixture", e.to_string()))?;
            }
            (None, true) => return Err(Error::MissingField("hamiltonian".into())),
        }
        let state = self.coherent().map_err(|e| config_err("state", e.to_string()))?;
        if !(state.x0 > grid.x_min && state.x0 < grid.x_max) {
            return Err(config_err("state.x0", "must lie inside the grid"));
        }
        let pn = grid.p_nyquist();
        if state.p0.abs() >= pn {
            return Err(config_err("state.p0", format!("must lie inside the momentum band |p| < {pn}")));
        }
        if part.delta_x > grid.length() {
            return Err(config_err("partition.delta_x", "slots must fit inside the grid"));
        }
        if part.delta_p > 2.0 * pn {
            return Err(config_err("partition.delta_p", "slots must fit inside the momentum band"));
        }
        if let Some(dt) = self.propagator.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(config_err("propagator.dt", "must be positive and finite"));
            }
        }
        if !(self.propagator.classical_dt.is_finite() && self.propagator.classical_dt > 0.0) {
            return Err(config_err("propagator.classical_dt", "must be positive and finite"));
        }
        let s = &self.schedule;
        if s.times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(config_err("schedule.times", "must be non-negative"));
        }
        if s.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config_err("schedule.times", "must be strictly increasing"));
        }
        if let Some(tau) = s.tau {
            if !(tau.is_finite() && tau > 0.0) {
                return Err(config_err("schedule.tau", "must be positive and finite"));
            }
        }
        if s.trajectories == 0 {
            return Err(config_err("schedule.trajectories", "must be at least 1"));
        }
        if !(s.characteristics_fraction > 0.0 && s.characteristics_fraction <= 1.0) {
            return Err(config_err("schedule.characteristics_fraction", "must lie in (0, 1]"));
        }
        if !(s.tv_threshold > 0.0 && s.tv_threshold < 1.0) {
            return Err(config_err("schedule.tv_threshold", "must lie in (0, 1)"));
        }
        if let Some(sw) = &self.sweep {
            for (name, v) in [("sweep.delta_x", &sw.delta_x), ("sweep.delta_p", &sw.delta_p), ("sweep.tau", &sw.tau)] {
                if v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                    return Err(config_err(name, "entries must be positive"));
                }
            }
            if sw.trajectories == 0 {
                return Err(config_err("sweep.trajectories", "must be at least 1"));
            }
        }
        if let Some(e) = &self.ehrenfest {
            if e.sigma_p_si.is_some_and(|s| !(s > 0.0 && s.is_finite())) {
                return Err(config_err("ehrenfest.sigma_p_si", "must be positive"));
            }
            if (e.sigma_p_si.is_some() || e.collision.is_some()) && self.units.is_none() {
                return Err(config_err("units", "SI inputs in [ehrenfest] need a [units] table"));
            }
            if let Some(c) = e.collision {
                if ![c.density, c.cross_section, c.speed].iter().all(|v| v.is_finite() && *v > 0.0) {
                    return Err(config_err("ehrenfest.collision", "density, cross_section and speed must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.x_min, self.grid.x_max, self.grid.n)
    }

    pub fn partition(&self) -> Result<SlotPartition> {
        let p = &self.partition;
        SlotPartition::new(p.delta_x, p.delta_p, p.x_origin, p.p_origin)
    }

    /// The single Hamiltonian; for mixtures, the first component.
    pub fn spec(&self) -> Result<HamiltonianSpec> {
        match (&self.hamiltonian, self.mixture.first()) {
            (Some(h), _) => HamiltonianSpec::new(h.mass, h.potential.clone()),
            (None, Some(c)) => HamiltonianSpec::new(c.mass, c.potential.clone()),
            (None, None) => Err(Error::MissingField("hamiltonian".into())),
        }
    }

    pub fn channel(&self) -> Result<Option<MixedChannelSpec>> {
        if self.mixture.is_empty() {
            return Ok(None);
        }
        let comps = self
            .mixture
            .iter()
            .map(|c| Ok((c.weight, HamiltonianSpec::new(c.mass, c.potential.clone())?)))
            .collect::<Result<Vec<_>>>()?;
        MixedChannelSpec::new(comps).map(Some)
    }

    /// All Hamiltonians the scenario evolves under.
    pub fn specs(&self) -> Result<Vec<HamiltonianSpec>> {
        match self.channel()? {
            Some(c) => Ok(c.components.into_iter().map(|(_, s)| s).collect()),
            None => Ok(vec![self.spec()?]),
        }
    }

    pub fn coherent(&self) -> Result<CoherentStateParams> {
        CoherentStateParams::new(self.state.x0, self.state.p0, self.state.sigma_x)
    }

    pub fn unit_scale(&self) -> Result<Option<UnitScale>> {
        self.units.map(|u| UnitScale::from_length_mass(u.length, u.mass)).transpose()
    }

    /// Configured step, or the default fraction of the tightest stability
    /// limit over all Hamiltonians.
    pub fn propagator_config(&self) -> Result<PropagatorConfig> {
        let grid = self.grid()?;
        let dt = match self.propagator.dt {
            Some(dt) => dt,
            None => {
                let limit = self
                    .specs()?
                    .iter()
                    .map(|s| PropagatorConfig::max_stable_dt(&grid, s))
                    .fold(f64::INFINITY, f64::min);
                DEFAULT_DT_FRACTION * limit
            }
        };
        Ok(PropagatorConfig::new(dt).with_edge_width(self.state.sigma_x))
    }

    /// Slots covering the grid and the momentum band.
    pub fn window(&self) -> Result<SlotWindow> {
        let grid = self.grid()?;
        let pn = grid.p_nyquist();
        Ok(self.partition()?.covering_window(grid.x_min, grid.x_max, -pn, pn))
    }

    pub fn tau(&self) -> Result<f64> {
        self.schedule.tau.ok_or_else(|| Error::MissingField("schedule.tau".into()))
    }
}

fn describe(e: &toml::de::Error) -> Error {
    let msg = e.message();
    // serde reports "missing field `x`"; keep the field name in the diagnostic
    if let Some(rest) = msg.strip_prefix("missing field `") {
        return Error::MissingField(rest.trim_end_matches('`').to_string());
    }
    Error::Parse(msg.to_string())
}
