//! Unit handling. Every simulation runs in units with hbar = 1; a
//! [`UnitScale`] maps those units to SI and back.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant in simulation units.
pub const HBAR: f64 = 1.0;

/// CODATA 2018 reduced Planck constant, J*s.
pub const HBAR_SI: f64 = 1.054_571_817e-34;

/// Planck constant, J*s.
pub const PLANCK_SI: f64 = 6.626_070_15e-34;

/// Boltzmann constant used by the macroscopic estimate, J/K.
pub const BOLTZMANN_SI: f64 = 1.38e-23;

/// Elementary charge, C.
pub const ELEMENTARY_CHARGE_SI: f64 = 1.602_176_634e-19;

/// Vacuum permittivity, F/m.
pub const EPSILON0_SI: f64 = 8.854_187_812_8e-12;

/// Conversion between simulation units and SI.
///
/// `length_unit`, `mass_unit` and `time_unit` are the SI values of one
/// simulation unit. The time unit is fixed by requiring that hbar is
/// `hbar` in simulation units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitScale {
    pub hbar: f64,
    pub length_unit: f64,
    pub mass_unit: f64,
    pub time_unit: f64,
}

impl Default for UnitScale {
    fn default() -> Self {
        Self::from_length_mass(1.0, 1.0).expect("unit scale")
    }
}

impl UnitScale {
    pub fn from_length_mass(length_unit: f64, mass_unit: f64) -> Result<Self> {
        if !(length_unit > 0.0 && length_unit.is_finite()) {
            return Err(Error::param("length_unit", "must be positive and finite"));
        }
        if !(mass_unit > 0.0 && mass_unit.is_finite()) {
            return Err(Error::param("mass_unit", "must be positive and finite"));
        }
        let time_unit = mass_unit * length_unit * length_unit / HBAR_SI * HBAR;
        Ok(Self { hbar: HBAR, length_unit, mass_unit, time_unit })
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("hbar", self.hbar),
            ("length_unit", self.length_unit),
            ("mass_unit", self.mass_unit),
            ("time_unit", self.time_unit),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, "must be positive and finite"));
            }
        }
        let rel = (self.physical_hbar() - HBAR_SI).abs() / HBAR_SI;
        if rel > 1e-12 {
            return Err(Error::param(
                "time_unit",
                format!("inconsistent with hbar (relative error {rel:.2e})"),
            ));
        }
        Ok(())
    }

    /// hbar reassembled from the scale factors, J*s.
    pub fn physical_hbar(&self) -> f64 {
        self.hbar * self.mass_unit * self.length_unit * self.length_unit / self.time_unit
    }

    pub fn momentum_unit(&self) -> f64 {
        self.mass_unit * self.length_unit / self.time_unit
    }

    pub fn energy_unit(&self) -> f64 {
        self.mass_unit * self.length_unit * self.length_unit / (self.time_unit * self.time_unit)
    }

    pub fn length_to_sim(&self, meters: f64) -> f64 {
        meters / self.length_unit
    }
    pub fn length_to_si(&self, x: f64) -> f64 {
        x * self.length_unit
    }
    pub fn mass_to_sim(&self, kg: f64) -> f64 {
        kg / self.mass_unit
    }
    pub fn mass_to_si(&self, m: f64) -> f64 {
        m * self.mass_unit
    }
    pub fn time_to_sim(&self, seconds: f64) -> f64 {
        seconds / self.time_unit
    }
    pub fn time_to_si(&self, t: f64) -> f64 {
        t * self.time_unit
    }
    pub fn momentum_to_sim(&self, p: f64) -> f64 {
        p / self.momentum_unit()
    }
    pub fn momentum_to_si(&self, p: f64) -> f64 {
        p * self.momentum_unit()
    }
    pub fn energy_to_sim(&self, e: f64) -> f64 {
        e / self.energy_unit()
    }
    pub fn energy_to_si(&self, e: f64) -> f64 {
        e * self.energy_unit()
    }
}
