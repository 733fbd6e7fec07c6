//! Dense complex operators in the orthonormal lattice basis `e_k = delta_k / sqrt(dx)`.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, Spectral, WaveFunction};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    grid: Grid,
    entries: DMatrix<Complex64>,
}

impl OperatorMatrix {
    pub fn new(grid: Grid, entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() != grid.n || entries.ncols() != grid.n {
            return Err(Error::LengthMismatch(entries.nrows(), grid.n));
        }
        if entries.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("operator entries"));
        }
        Ok(Self { grid, entries })
    }

    pub(crate) fn from_raw(grid: Grid, entries: DMatrix<Complex64>) -> Self {
        Self { grid, entries }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, entries: DMatrix::zeros(grid.n, grid.n) }
    }

    pub fn identity(grid: Grid) -> Self {
        Self { grid, entries: DMatrix::identity(grid.n, grid.n) }
    }

    /// Multiplication by `f(x_k)`.
    pub fn diagonal(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let d = DVector::from_iterator(grid.n, (0..grid.n).map(|k| Complex64::from(f(grid.x(k)))));
        Self { grid, entries: DMatrix::from_diagonal(&d) }
    }

    pub fn position(grid: Grid) -> Self {
        Self::diagonal(grid, |x| x)
    }

    /// `g(p)` applied spectrally: diagonal on the FFT momentum lattice, a
    /// circulant matrix in position space.
    pub fn momentum_function(grid: Grid, g: impl Fn(f64) -> Complex64) -> Self {
        let n = grid.n;
        let mut c: Vec<Complex64> = (0..n).map(|m| g(grid.momentum(m))).collect();
        Spectral::new(n).inverse(&mut c);
        Self { grid, entries: DMatrix::from_fn(n, n, |k, l| c[(k + n - l) % n]) }
    }

    pub fn momentum(grid: Grid) -> Self {
        Self::momentum_function(grid, Complex64::from)
    }

    /// `exp(-i a p / hbar)`, the translation by `a`.
    pub fn translation(grid: Grid, a: f64) -> Self {
        Self::momentum_function(grid, |p| (-I * p * a / crate::units::HBAR).exp())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<Complex64> {
        self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self { grid: self.grid, entries: self.entries.adjoint() }
    }

    /// `(A + A^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self { grid: self.grid, entries: (&self.entries + self.entries.adjoint()) * Complex64::from(0.5) }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { grid: self.grid, entries: &self.entries * s }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::from(s))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self {
            grid: self.grid,
            entries: &self.entries * &other.entries - &other.entries * &self.entries,
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// True when `max|A - A^dagger| < tol * max|A|`.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        let scale = self.max_abs_entry();
        let diff = (&self.entries - self.entries.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        diff <= tol * scale.max(f64::MIN_POSITIVE)
    }

    pub fn singular_values(&self) -> Vec<f64> {
        self.entries.clone().svd(false, false).singular_values.iter().copied().collect()
    }

    /// Schatten 1-norm.
    pub fn trace_norm(&self) -> f64 {
        self.singular_values().iter().sum()
    }

    /// Schatten infinity-norm.
    pub fn spectral_norm(&self) -> f64 {
        self.singular_values().iter().copied().fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Eigenvalues of the Hermitian part, ascending.
    ///
    /// The part is shifted by its Frobenius norm to make it positive
    /// semidefinite, so the eigenvalues are the singular values minus the shift.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.dim();
        let mut h = (&self.entries + self.entries.adjoint()) * Complex64::from(0.5);
        let shift = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for k in 0..n {
            h[(k, k)] += shift;
        }
        let mut ev: Vec<f64> = h.svd(false, false).singular_values.iter().map(|s| s - shift).collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// `<psi| A |psi>` with lattice normalization.
    pub fn expectation(&self, psi: &WaveFunction) -> Result<Complex64> {
        let v = self.basis_vector(psi)?;
        Ok((v.adjoint() * &self.entries * &v)[(0, 0)])
    }

    /// `A psi`, returned as lattice amplitudes (not renormalized).
    pub fn apply(&self, psi: &WaveFunction) -> Result<Vec<Complex64>> {
        let v = self.basis_vector(psi)?;
        let s = 1.0 / self.grid.dx().sqrt();
        Ok((&self.entries * v).iter().map(|z| z * s).collect())
    }

    fn basis_vector(&self, psi: &WaveFunction) -> Result<DVector<Complex64>> {
        if *psi.grid() != self.grid {
            return Err(Error::param("grid", "state and operator live on different grids"));
        }
        let s = self.grid.dx().sqrt();
        Ok(DVector::from_iterator(self.grid.n, psi.amplitudes().iter().map(|z| z * s)))
    }

    /// `P^2 - P`-style products without cloning the caller.
    pub fn square(&self) -> Self {
        Self { grid: self.grid, entries: &self.entries * &self.entries }
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix { grid: self.grid, entries: &self.entries + &rhs.entries }
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix { grid: self.grid, entries: &self.entries - &rhs.entries }
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix { grid: self.grid, entries: &self.entries * &rhs.entries }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherent::{coherent_state, CoherentStateParams};

    #[test]
    fn momentum_operator_matches_spectral_expectation() {
        let g = Grid::new(-12.0, 12.0, 128).unwrap();
        let psi = coherent_state(CoherentStateParams::new(0.5, 1.3, 1.0).unwrap(), g).unwrap();
        let p = OperatorMatrix::momentum(g);
        assert!(p.is_hermitian(1e-12));
        let e = p.expectation(&psi).unwrap();
        assert!((e.re - psi.expectation_p()).abs() < 1e-10);
        assert!(e.im.abs() < 1e-12);
        let x = OperatorMatrix::position(g);
        assert!((x.expectation(&psi).unwrap().re - psi.expectation_x()).abs() < 1e-12);
    }

    #[test]
    fn simple_norms() {
        let g = Grid::new(0.0, 1.0, 8).unwrap();
        let half = OperatorMatrix::identity(g).scale_real(0.5);
        assert!((half.trace_norm() - 4.0).abs() < 1e-12);
        assert!((half.spectral_norm() - 0.5).abs() < 1e-12);
        assert!((half.frobenius_norm() - 2.0f64.sqrt()).abs() < 1e-12);
        let m = DMatrix::from_fn(8, 8, |r, c| match (r as i64 - c as i64).abs() {
            0 => Complex64::from(r as f64),
            1 if r < c => Complex64::new(0.0, 0.3),
            1 => Complex64::new(0.0, -0.3),
            _ => Complex64::from(0.0),
        });
        let a = OperatorMatrix::new(g, m).unwrap();
        let ev = a.eigenvalues();
        assert_eq!(ev.len(), 8);
        assert!((ev.iter().sum::<f64>() - 28.0).abs() < 1e-12);
        let sv_sum: f64 = a.singular_values().iter().sum();
        assert!((ev.iter().map(|e| e.abs()).sum::<f64>() - sv_sum).abs() < 1e-12);
    }

    #[test]
    fn lattice_translation_is_a_shift() {
        let g = Grid::new(-8.0, 8.0, 64).unwrap();
        let t = OperatorMatrix::translation(g, 4.0 * g.dx());
        for k in 0..64 {
            let l = (k + 60) % 64;
            assert!((t.entries()[(k, l)] - Complex64::from(1.0)).norm() < 1e-12);
        }
    }
}
