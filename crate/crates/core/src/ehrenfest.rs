//! Ehrenfest-time estimates: the slot-scale lower bound, the textbook
//! free-packet time, the operator drift rate and the physical scenario table.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::WaveFunction;
use crate::hamiltonian::HamiltonianSpec;
use crate::operator_lab::OperatorLab;
use crate::slots::{Slot, SlotPartition};
use crate::units::{UnitScale, BOLTZMANN_SI, ELEMENTARY_CHARGE_SI, EPSILON0_SI, HBAR, HBAR_SI, PLANCK_SI};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EhrenfestReport {
    pub label: String,
    /// `hbar / [dp^2/m + 2 |V(x+dx) - 2V(x) + V(x-dx)|]`.
    pub t_lower_bound: f64,
    /// `dp^2 / (m hbar)`.
    pub kinetic_term: f64,
    /// `2 |second difference of V| / hbar`.
    pub potential_term: f64,
    pub slot: Option<Slot>,
}

impl EhrenfestReport {
    /// Nearest decade of the bound.
    pub fn order_of_magnitude(&self) -> i32 {
        order_of_magnitude(self.t_lower_bound)
    }
}

/// `round(log10 |v|)`: one-significant-figure inputs give e.g. 1.05e-13 -> -13.
pub fn order_of_magnitude(v: f64) -> i32 {
    v.abs().log10().round() as i32
}

/// Lower bound on the Ehrenfest time at position `x_i`.
pub fn ehrenfest_lower_bound(spec: &HamiltonianSpec, part: &SlotPartition, x_i: f64) -> Result<EhrenfestReport> {
    ehrenfest_bound_with_hbar(spec, part.delta_x, part.delta_p, x_i, HBAR)
}

/// The bound evaluated at the centre of slot `(i, j)`.
pub fn ehrenfest_lower_bound_at_slot(spec: &HamiltonianSpec, part: &SlotPartition, slot: Slot) -> Result<EhrenfestReport> {
    let mut r = ehrenfest_lower_bound(spec, part, part.x_center(slot.0))?;
    r.slot = Some(slot);
    Ok(r)
}

fn ehrenfest_bound_with_hbar(spec: &HamiltonianSpec, dx: f64, dp: f64, x_i: f64, hbar: f64) -> Result<EhrenfestReport> {
    spec.validate()?;
    if !(dx > 0.0 && dx.is_finite() && dp >= 0.0 && dp.is_finite()) {
        return Err(Error::param("partition", "slot sides must be positive and finite"));
    }
    if !x_i.is_finite() {
        return Err(Error::NonFinite("x_i"));
    }
    let kinetic_term = dp * dp / (spec.mass * hbar);
    let potential_term = 2.0 * spec.second_difference(x_i, dx).abs() / hbar;
    let rate = kinetic_term + potential_term;
    if !(rate > 0.0) {
        return Err(Error::ZeroDenominator);
    }
    Ok(EhrenfestReport {
        label: String::new(),
        t_lower_bound: 1.0 / rate,
        kinetic_term,
        potential_term,
        slot: None,
    })
}

/// `m hbar / sigma_p^2`.
pub fn textbook_free_ehrenfest(mass: f64, sigma_p: f64) -> Result<f64> {
    if !(sigma_p > 0.0 && sigma_p.is_finite()) {
        return Err(Error::param("sigma_p", "must be positive and finite"));
    }
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::param("mass", "must be positive and finite"));
    }
    Ok(mass * HBAR / (sigma_p * sigma_p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftRate {
    /// `|<psi| [dH, P_ij] |psi>| / hbar`.
    pub rate: f64,
    /// `||[dH, P_ij]||_inf / hbar`, which bounds `rate` for normalized states.
    pub holder_bound: f64,
}

impl DriftRate {
    pub fn time(&self) -> f64 {
        1.0 / self.rate
    }
}

/// Which part of `H - H_eff` drives the drift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FluctuationOrder {
    #[default]
    Quadratic,
    Full,
}

/// Initial rate at which `p_ij` departs from the linearized evolution.
pub fn drift_rate(
    psi: &WaveFunction,
    spec: &HamiltonianSpec,
    lab: &OperatorLab,
    slot: Slot,
    order: FluctuationOrder,
) -> Result<DriftRate> {
    let dh = match order {
        FluctuationOrder::Quadratic => lab.quadratic_fluctuation_hamiltonian(spec),
        FluctuationOrder::Full => lab.full_fluctuation_hamiltonian(spec),
    };
    let p = lab.element(slot.0, slot.1)?;
    let c = dh.commutator(&p);
    let rate = c.expectation(psi)?.norm() / HBAR;
    Ok(DriftRate { rate, holder_bound: c.spectral_norm() / HBAR })
}

/// Radius at which the Coulomb energy of charges `q1 q2` equals `energy` (SI).
pub fn coulomb_radius(q1: f64, q2: f64, energy: f64) -> f64 {
    q1 * q2 / (4.0 * std::f64::consts::PI * EPSILON0_SI * energy)
}

/// `2 p sin(dtheta / 2)`.
pub fn momentum_resolution(p: f64, dtheta: f64) -> f64 {
    2.0 * p * (0.5 * dtheta).sin()
}

/// `1 / (n sigma v)`: mean time between collisions.
pub fn collision_time(density: f64, cross_section: f64, speed: f64) -> f64 {
    1.0 / (density * cross_section * speed)
}

/// `h / sqrt(3 m k_B T)`.
pub fn thermal_de_broglie(mass: f64, temperature: f64) -> f64 {
    PLANCK_SI / (3.0 * mass * BOLTZMANN_SI * temperature).sqrt()
}

/// One row of the physical comparison, in SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub label: String,
    pub mass: f64,
    pub delta_x: f64,
    /// Momentum scale entering the time (slot side or packet width).
    pub momentum_scale: f64,
    pub t_ehrenfest: f64,
    pub order: i32,
    pub method: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioTable {
    pub micro: ScenarioRow,
    pub macro_: ScenarioRow,
    /// Supporting estimates for the cloud-chamber case (SI).
    pub coulomb_radius: f64,
    pub angular_resolution: f64,
    pub alpha_momentum_resolution: f64,
    pub collision_time: f64,
    pub collision_order: i32,
    pub thermal_wavelength_macro: f64,
    /// `collision_time < t_E(micro)`.
    pub measured_faster_than_drift: bool,
}

/// Physical inputs of the comparison table (SI).
pub mod physical {
    pub const MICRO_MASS: f64 = 1e-27;
    pub const MICRO_DX: f64 = 1e-10;
    pub const MICRO_DP: f64 = 1e-24;
    pub const MACRO_MASS: f64 = 1e-3;
    pub const MACRO_DX: f64 = 1e-6;
    pub const MACRO_SIGMA_P: f64 = 1e-28;
    pub const ALPHA_SPEED: f64 = 1e7;
    pub const ALPHA_MOMENTUM: f64 = 1e-19;
    pub const TRACK_WIDTH: f64 = 1e-6;
    pub const TRACK_DISTANCE: f64 = 1e-1;
    pub const IONIZATION_ENERGY_EV: f64 = 10.0;
    pub const VAPOUR_DENSITY: f64 = 1e25;
    pub const CROSS_SECTION: f64 = 1e-18;
    pub const ROOM_TEMPERATURE: f64 = 300.0;
}

/// Free-particle slot bound computed in simulation units fixed by `(dx, m)`
/// and converted back to seconds.
fn micro_row() -> Result<ScenarioRow> {
    use physical::*;
    let scale = UnitScale::from_length_mass(MICRO_DX, MICRO_MASS)?;
    let spec = HamiltonianSpec::free(scale.mass_to_sim(MICRO_MASS))?;
    let part = SlotPartition::new(scale.length_to_sim(MICRO_DX), scale.momentum_to_sim(MICRO_DP), 0.0, 0.0)?;
    let r = ehrenfest_lower_bound(&spec, &part, 0.0)?;
    let t = scale.time_to_si(r.t_lower_bound);
    Ok(ScenarioRow {
        label: "micro".into(),
        mass: MICRO_MASS,
        delta_x: MICRO_DX,
        momentum_scale: MICRO_DP,
        t_ehrenfest: t,
        order: order_of_magnitude(t),
        method: "slot lower bound".into(),
    })
}

fn macro_row() -> Result<ScenarioRow> {
    use physical::*;
    let scale = UnitScale::from_length_mass(MACRO_DX, MACRO_MASS)?;
    let t_sim = textbook_free_ehrenfest(scale.mass_to_sim(MACRO_MASS), scale.momentum_to_sim(MACRO_SIGMA_P))?;
    let t = scale.time_to_si(t_sim);
    Ok(ScenarioRow {
        label: "macro".into(),
        mass: MACRO_MASS,
        delta_x: MACRO_DX,
        momentum_scale: MACRO_SIGMA_P,
        t_ehrenfest: t,
        order: order_of_magnitude(t),
        method: "free-packet estimate".into(),
    })
}

pub fn scenario_table() -> Result<ScenarioTable> {
    use physical::*;
    let micro = micro_row()?;
    let macro_ = macro_row()?;
    let e = ELEMENTARY_CHARGE_SI;
    let tau = collision_time(VAPOUR_DENSITY, CROSS_SECTION, ALPHA_SPEED);
    let dtheta = TRACK_WIDTH / TRACK_DISTANCE;
    Ok(ScenarioTable {
        coulomb_radius: coulomb_radius(2.0 * e, e, IONIZATION_ENERGY_EV * e),
        angular_resolution: dtheta,
        alpha_momentum_resolution: momentum_resolution(ALPHA_MOMENTUM, dtheta),
        collision_time: tau,
        collision_order: order_of_magnitude(tau),
        thermal_wavelength_macro: thermal_de_broglie(MACRO_MASS, ROOM_TEMPERATURE),
        measured_faster_than_drift: tau < micro.t_ehrenfest,
        micro,
        macro_,
    })
}

/// Direct SI evaluation of the free slot bound, `hbar m / dp^2`.
pub fn free_bound_si(mass: f64, delta_p: f64) -> f64 {
    HBAR_SI * mass / (delta_p * delta_p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherent::{coherent_state, CoherentStateParams};
    use crate::grid::Grid;
    use crate::operator_lab::QuadratureRule;

    #[test]
    fn free_bound_and_identity() {
        let spec = HamiltonianSpec::free(2.0).unwrap();
        let part = SlotPartition::new(3.0, 0.5, 0.0, 0.0).unwrap();
        let r = ehrenfest_lower_bound(&spec, &part, 1.7).unwrap();
        assert!((r.t_lower_bound - 2.0 / 0.25).abs() < 1e-12);
        assert_eq!(r.potential_term, 0.0);
        let hbar = HBAR;
        assert!((r.t_lower_bound - hbar / (r.kinetic_term * hbar + r.potential_term * hbar)).abs() < 1e-12);
        let zero = SlotPartition { delta_p: 0.0, ..part };
        assert!(matches!(ehrenfest_bound_with_hbar(&spec, zero.delta_x, 0.0, 0.0, HBAR), Err(Error::ZeroDenominator)));
    }

    #[test]
    fn harmonic_second_difference_is_constant() {
        let (m, w) = (1.7, 0.9);
        let spec = HamiltonianSpec::harmonic(m, w).unwrap();
        let part = SlotPartition::new(2.5, 1.0, 0.0, 0.0).unwrap();
        for x in [-10.0, 0.0, 3.3, 40.0] {
            let d2 = spec.second_difference(x, 2.5) / (2.5 * 2.5);
            assert!((d2 - m * w * w).abs() < 1e-9);
            let r = ehrenfest_lower_bound(&spec, &part, x).unwrap();
            assert!((r.potential_term - 2.0 * m * w * w * 6.25).abs() < 1e-8);
        }
    }

    #[test]
    fn quartic_bound_shrinks_away_from_origin() {
        let spec = HamiltonianSpec::new(1.0, vec![(4, 0.1)]).unwrap();
        let part = SlotPartition::new(1.0, 1.0, 0.0, 0.0).unwrap();
        let mut last = f64::INFINITY;
        for x in [0.0, 0.5, 1.0, 2.0, 4.0] {
            let t = ehrenfest_lower_bound(&spec, &part, x).unwrap().t_lower_bound;
            assert!(t < last);
            last = t;
        }
    }

    #[test]
    fn textbook_scaling() {
        let a = textbook_free_ehrenfest(3.0, 0.5).unwrap();
        let b = textbook_free_ehrenfest(3.0, 1.0).unwrap();
        assert!((a / b - 4.0).abs() < 1e-12);
        assert!(textbook_free_ehrenfest(1.0, 0.0).is_err());
    }

    #[test]
    fn physical_table() {
        let t = scenario_table().unwrap();
        assert_eq!(t.micro.order, -13);
        assert_eq!(t.macro_.order, 19);
        assert_eq!(t.collision_order, -14);
        assert!(t.measured_faster_than_drift);
        let direct = free_bound_si(physical::MICRO_MASS, physical::MICRO_DP);
        assert!((t.micro.t_ehrenfest - direct).abs() / direct < 1e-10);
        let direct = free_bound_si(physical::MACRO_MASS, physical::MACRO_SIGMA_P);
        assert!((t.macro_.t_ehrenfest - direct).abs() / direct < 1e-10);
        assert_eq!(order_of_magnitude(t.coulomb_radius), -10);
        assert_eq!(order_of_magnitude(t.alpha_momentum_resolution), -24);
        assert_eq!(order_of_magnitude(t.thermal_wavelength_macro), -22);
    }

    fn lab() -> OperatorLab {
        let g = Grid::new(-48.0, 48.0, 256).unwrap();
        let part = SlotPartition::new(8.0, 4.0, -4.0, -2.0).unwrap();
        let w = OperatorLab::admissible_window(&g, 1.0, &part).unwrap();
        OperatorLab::new(g, 1.0, part, w, QuadratureRule::exact()).unwrap()
    }

    #[test]
    fn free_drift_respects_holder_chain() {
        let lab = lab();
        let spec = HamiltonianSpec::free(1.0).unwrap();
        let psi = coherent_state(CoherentStateParams::new(0.0, 0.0, 1.0).unwrap(), *lab.grid()).unwrap();
        let d = drift_rate(&psi, &spec, &lab, (0, 0), FluctuationOrder::Quadratic).unwrap();
        assert!(d.rate <= d.holder_bound + 1e-12);
        let dp = lab.partition().delta_p;
        assert!(d.rate <= dp * dp / spec.mass, "{} vs {}", d.rate, dp * dp);
        // with V = 0 the quadratic part is the kinetic fluctuation alone
        let q = lab.quadratic_fluctuation_hamiltonian(&spec);
        let kin = lab.delta_p().square().scale_real(0.5).hermitian_part();
        assert!((&q - &kin).max_abs_entry() < 1e-12);
    }

    #[test]
    fn harmonic_ground_state_outlives_the_bound() {
        let lab = lab();
        let spec = HamiltonianSpec::harmonic(1.0, 0.5).unwrap();
        let psi = coherent_state(CoherentStateParams::new(0.0, 0.0, 1.0).unwrap(), *lab.grid()).unwrap();
        let d = drift_rate(&psi, &spec, &lab, (0, 0), FluctuationOrder::Quadratic).unwrap();
        let bound = ehrenfest_lower_bound_at_slot(&spec, lab.partition(), (0, 0)).unwrap();
        assert!(d.time() >= bound.t_lower_bound, "{} vs {}", d.time(), bound.t_lower_bound);
    }
}
