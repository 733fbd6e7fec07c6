//! Polynomial one-dimensional Hamiltonians `H = p^2/2m + sum c_n x^n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub mass: f64,
    /// `(n, c_n)` pairs; repeated powers add.
    #[serde(default)]
    pub potential_coeffs: Vec<(u32, f64)>,
}

impl HamiltonianSpec {
    pub fn new(mass: f64, potential_coeffs: Vec<(u32, f64)>) -> Result<Self> {
        let h = Self { mass, potential_coeffs };
        h.validate()?;
        Ok(h)
    }

    pub fn free(mass: f64) -> Result<Self> {
        Self::new(mass, Vec::new())
    }

    /// `V = m w^2 x^2 / 2`.
    pub fn harmonic(mass: f64, omega: f64) -> Result<Self> {
        Self::new(mass, vec![(2, 0.5 * mass * omega * omega)])
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mass.is_finite() {
            return Err(Error::NonFinite("mass"));
        }
        if self.mass <= 0.0 {
            return Err(Error::param("mass", "must be positive"));
        }
        if self.potential_coeffs.iter().any(|(_, c)| !c.is_finite()) {
            return Err(Error::NonFinite("potential coefficient"));
        }
        if self.potential_coeffs.iter().any(|&(n, _)| n > 16) {
            return Err(Error::param("potential_coeffs", "powers above 16 are not supported"));
        }
        Ok(())
    }

    pub fn is_free(&self) -> bool {
        self.potential_coeffs.iter().all(|&(n, c)| c == 0.0 || n == 0)
    }

    /// Highest power with a nonzero coefficient.
    pub fn degree(&self) -> u32 {
        self.potential_coeffs.iter().filter(|(_, c)| *c != 0.0).map(|(n, _)| *n).max().unwrap_or(0)
    }

    pub fn potential(&self, x: f64) -> f64 {
        self.potential_coeffs.iter().map(|&(n, c)| c * x.powi(n as i32)).sum()
    }

    /// `dV/dx`.
    pub fn force_gradient(&self, x: f64) -> f64 {
        self.potential_coeffs
            .iter()
            .filter(|(n, _)| *n > 0)
            .map(|&(n, c)| c * n as f64 * x.powi(n as i32 - 1))
            .sum()
    }

    /// `d^2V/dx^2`.
    pub fn curvature(&self, x: f64) -> f64 {
        self.potential_coeffs
            .iter()
            .filter(|(n, _)| *n > 1)
            .map(|&(n, c)| c * (n * (n - 1)) as f64 * x.powi(n as i32 - 2))
            .sum()
    }

    pub fn kinetic(&self, p: f64) -> f64 {
        p * p / (2.0 * self.mass)
    }

    pub fn energy(&self, x: f64, p: f64) -> f64 {
        self.kinetic(p) + self.potential(x)
    }

    /// Symmetric second difference `V(x+h) - 2V(x) + V(x-h)`.
    pub fn second_difference(&self, x: f64, h: f64) -> f64 {
        self.potential(x + h) - 2.0 * self.potential(x) + self.potential(x - h)
    }

    /// Hamilton's equations: `(dH/dp, -dH/dx)`.
    pub fn velocity(&self, x: f64, p: f64) -> (f64, f64) {
        (p / self.mass, -self.force_gradient(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_second_difference_is_exact() {
        let h = HamiltonianSpec::harmonic(2.0, 0.7).unwrap();
        for x in [-3.0, 0.0, 1.7, 40.0] {
            let d2 = h.second_difference(x, 0.5) / 0.25;
            assert!((d2 - 2.0 * 0.49).abs() < 1e-9);
            assert!((h.curvature(x) - 0.98).abs() < 1e-12);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = HamiltonianSpec::new(1.0, vec![(4, 0.3), (3, -0.2), (1, 1.5), (0, 2.0)]).unwrap();
        let e = 1e-5;
        for x in [-1.3, 0.2, 2.5] {
            let fd = (h.potential(x + e) - h.potential(x - e)) / (2.0 * e);
            assert!((fd - h.force_gradient(x)).abs() < 1e-6);
            let fd2 = (h.force_gradient(x + e) - h.force_gradient(x - e)) / (2.0 * e);
            assert!((fd2 - h.curvature(x)).abs() < 1e-6);
        }
    }

    #[test]
    fn validation() {
        assert!(HamiltonianSpec::free(0.0).is_err());
        assert!(HamiltonianSpec::new(1.0, vec![(2, f64::NAN)]).is_err());
        assert!(HamiltonianSpec::free(1.0).unwrap().is_free());
        assert_eq!(HamiltonianSpec::new(1.0, vec![(4, 1.0), (6, 0.0)]).unwrap().degree(), 4);
    }
}
