//! Operator identities on one lattice, partition and slot window: fluctuation
//! operators, translation-generator commutators, discrete-derivative error and
//! the linearized Hamiltonian.

use num_complex::Complex64;

use super::matrix::OperatorMatrix;
use super::povm::{PovmBuilder, QuadratureRule, Rect, Stripes};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::hamiltonian::HamiltonianSpec;
use crate::slots::{SlotPartition, SlotWindow};
use crate::units::HBAR;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `x - sum_i x_i P_{x_i}` and `p - sum_j p_j P_{p_j}`.
pub fn fluctuation_operators(grid: Grid, stripes: &Stripes) -> (OperatorMatrix, OperatorMatrix) {
    let mut dx = OperatorMatrix::position(grid).into_entries();
    for ((_, xc), s) in stripes.x_centers().zip(&stripes.x) {
        dx -= s.entries() * Complex64::from(xc);
    }
    let mut dp = OperatorMatrix::momentum(grid).into_entries();
    for ((_, pc), s) in stripes.p_centers().zip(&stripes.p) {
        dp -= s.entries() * Complex64::from(pc);
    }
    (OperatorMatrix::from_raw(grid, dx), OperatorMatrix::from_raw(grid, dp))
}

/// Residuals of the translation-generator identities for one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutatorResidual {
    /// `||[dp, P] - i hbar (P_{i+1,j} - P)/delta_x||_1 / ||[dp, P]||_1`.
    pub trace_p: f64,
    /// `||[dx, P] + i hbar (P_{i,j+1} - P)/delta_p||_1 / ||[dx, P]||_1`.
    pub trace_x: f64,
    pub spectral_p: f64,
    pub spectral_x: f64,
    /// `||[dp, P] - [p, P]||_1 / ||[p, P]||_1`.
    pub stripe_term_p: f64,
    pub stripe_term_x: f64,
}

/// Discrete versus continuous shift derivative of a slot operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteDerivativeError {
    /// `delta_x * ||(P_{i+1,j} - P_ij)/delta_x - d_x P_ij||_1`.
    pub epsilon_d: f64,
    /// `(delta_x^2 / 2) ||d_x^2 P_ij||_1`.
    pub predicted: f64,
    pub shift: f64,
}

/// Dense operator context over a slot window.
#[derive(Debug, Clone)]
pub struct OperatorLab {
    builder: PovmBuilder,
    partition: SlotPartition,
    stripes: Stripes,
    position: OperatorMatrix,
    momentum: OperatorMatrix,
    delta_x: OperatorMatrix,
    delta_p: OperatorMatrix,
}

impl OperatorLab {
    pub fn new(
        grid: Grid,
        sigma_x: f64,
        partition: SlotPartition,
        window: SlotWindow,
        quad: QuadratureRule,
    ) -> Result<Self> {
        partition.validate()?;
        let builder = PovmBuilder::new(grid, sigma_x, quad)?;
        let stripes = builder.stripes(&partition, &window)?;
        let (delta_x, delta_p) = fluctuation_operators(grid, &stripes);
        Ok(Self {
            position: OperatorMatrix::position(grid),
            momentum: OperatorMatrix::momentum(grid),
            builder,
            partition,
            stripes,
            delta_x,
            delta_p,
        })
    }

    /// Largest window whose slots keep the edge margin and stay in the band.
    pub fn admissible_window(grid: &Grid, sigma_x: f64, part: &SlotPartition) -> Option<SlotWindow> {
        let m = super::povm::EDGE_MARGIN * sigma_x;
        let pn = grid.p_nyquist();
        part.inner_window(grid.x_min + m, grid.x_max - m, -pn, pn)
    }

    pub fn grid(&self) -> &Grid {
        self.builder.grid()
    }

    pub fn sigma_x(&self) -> f64 {
        self.builder.sigma_x()
    }

    pub fn builder(&self) -> &PovmBuilder {
        &self.builder
    }

    pub fn partition(&self) -> &SlotPartition {
        &self.partition
    }

    pub fn window(&self) -> &SlotWindow {
        &self.stripes.window
    }

    pub fn stripes(&self) -> &Stripes {
        &self.stripes
    }

    pub fn position(&self) -> &OperatorMatrix {
        &self.position
    }

    pub fn momentum(&self) -> &OperatorMatrix {
        &self.momentum
    }

    pub fn delta_x(&self) -> &OperatorMatrix {
        &self.delta_x
    }

    pub fn delta_p(&self) -> &OperatorMatrix {
        &self.delta_p
    }

    fn require(&self, i: i64, j: i64) -> Result<()> {
        if !self.window().contains((i, j)) {
            return Err(Error::SlotOutsideWindow {
                i,
                j,
                reason: format!("not in operator window {:?}", self.window()),
            });
        }
        Ok(())
    }

    pub fn element(&self, i: i64, j: i64) -> Result<OperatorMatrix> {
        self.require(i, j)?;
        self.builder.element(&self.partition, i, j)
    }

    pub fn commutator_check(&self, i: i64, j: i64) -> Result<CommutatorResidual> {
        self.require(i + 1, j)?;
        self.require(i, j + 1)?;
        let p = self.element(i, j)?;
        let right = self.element(i + 1, j)?;
        let up = self.element(i, j + 1)?;
        let hbar = Complex64::from(HBAR);

        let cp = self.delta_p.commutator(&p);
        let target_p = (&right - &p).scale(I * hbar / self.partition.delta_x);
        let cx = self.delta_x.commutator(&p);
        let target_x = (&up - &p).scale(-I * hbar / self.partition.delta_p);
        let plain_p = self.momentum.commutator(&p);
        let plain_x = self.position.commutator(&p);

        let diff_p = &cp - &target_p;
        let diff_x = &cx - &target_x;
        Ok(CommutatorResidual {
            trace_p: diff_p.trace_norm() / cp.trace_norm(),
            trace_x: diff_x.trace_norm() / cx.trace_norm(),
            spectral_p: diff_p.spectral_norm() / cp.spectral_norm(),
            spectral_x: diff_x.spectral_norm() / cx.spectral_norm(),
            stripe_term_p: (&cp - &plain_p).trace_norm() / plain_p.trace_norm(),
            stripe_term_x: (&cx - &plain_x).trace_norm() / plain_x.trace_norm(),
        })
    }

    /// `|| T(delta_x) P_ij T(delta_x)^dagger - P_{i+1,j} ||_1 / ||P_ij||_1`.
    pub fn translation_covariance(&self, i: i64, j: i64) -> Result<f64> {
        self.require(i + 1, j)?;
        let p = self.element(i, j)?;
        let t = OperatorMatrix::translation(*self.grid(), self.partition.delta_x);
        let moved = &(&t * &p) * &t.adjoint();
        Ok((&moved - &self.element(i + 1, j)?).trace_norm() / p.trace_norm())
    }

    /// Discrete shift derivative against the central difference of
    /// origin-shifted elements with shift `h`.
    pub fn discrete_derivative_error(&self, i: i64, j: i64, h: f64) -> Result<DiscreteDerivativeError> {
        self.require(i + 1, j)?;
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::param("shift", "must be positive"));
        }
        let dx = self.partition.delta_x;
        let rect = Rect::slot(&self.partition, i, j);
        let plus = self.builder.rect_operator(&rect.shifted_x(h));
        let minus = self.builder.rect_operator(&rect.shifted_x(-h));
        let centre = self.element(i, j)?;
        let next = self.element(i + 1, j)?;

        let first = (&plus - &minus).scale_real(0.5 / h);
        let second = (&(&plus - &centre.scale_real(2.0)) + &minus).scale_real(1.0 / (h * h));
        let discrete = (&next - &centre).scale_real(1.0 / dx);
        Ok(DiscreteDerivativeError {
            epsilon_d: dx * (&discrete - &first).trace_norm(),
            predicted: 0.5 * dx * dx * second.trace_norm(),
            shift: h,
        })
    }

    /// `p^2/2m + V(x)` with the kinetic term applied spectrally.
    pub fn hamiltonian(&self, spec: &HamiltonianSpec) -> OperatorMatrix {
        let m = spec.mass;
        let kinetic = OperatorMatrix::momentum_function(*self.grid(), |p| Complex64::from(p * p / (2.0 * m)));
        let potential = OperatorMatrix::diagonal(*self.grid(), |x| spec.potential(x));
        &kinetic + &potential
    }

    /// Linearization of the Hamiltonian in the fluctuation operators around
    /// slot centers, symmetrized.
    pub fn effective_hamiltonian(&self, spec: &HamiltonianSpec) -> OperatorMatrix {
        let grid = *self.grid();
        let m = spec.mass;
        let mut acc = OperatorMatrix::zeros(grid).into_entries();
        let id = OperatorMatrix::identity(grid);
        for ((_, pc), stripe) in self.stripes.p_centers().zip(&self.stripes.p) {
            let coeff = &id.scale_real(pc * pc / (2.0 * m)) + &self.delta_p.scale_real(pc / m);
            acc += (&coeff * stripe).into_entries();
        }
        for ((_, xc), stripe) in self.stripes.x_centers().zip(&self.stripes.x) {
            let value = spec.potential(xc);
            let slope = spec.force_gradient(xc);
            let coeff = &id.scale_real(value) + &self.delta_x.scale_real(slope);
            acc += (&coeff * stripe).into_entries();
        }
        OperatorMatrix::from_raw(grid, acc).hermitian_part()
    }

    /// `H - H_eff`.
    pub fn full_fluctuation_hamiltonian(&self, spec: &HamiltonianSpec) -> OperatorMatrix {
        &self.hamiltonian(spec) - &self.effective_hamiltonian(spec)
    }

    /// Quadratic part of `H - H_eff`:
    /// `dp^2/2m + sum_k (V(x_k + dx) - 2 V(x_k) + V(x_k - dx))/dx^2 * dx_op^2 P_{x_k}`, symmetrized.
    pub fn quadratic_fluctuation_hamiltonian(&self, spec: &HamiltonianSpec) -> OperatorMatrix {
        let grid = *self.grid();
        let h = self.partition.delta_x;
        let mut acc = self.delta_p.square().scale_real(1.0 / (2.0 * spec.mass)).into_entries();
        if !spec.is_free() {
            let dx2 = self.delta_x.square();
            for ((_, xc), stripe) in self.stripes.x_centers().zip(&self.stripes.x) {
                let curv = spec.second_difference(xc, h) / (h * h);
                if curv != 0.0 {
                    acc += (&dx2 * stripe).into_entries() * Complex64::from(curv);
                }
            }
        }
        OperatorMatrix::from_raw(grid, acc).hermitian_part()
    }
}
