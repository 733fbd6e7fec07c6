//! Coarse-grained phase-space measurements on one-dimensional quantum systems.
//!
//! Phase space is tiled into rectangular slots of side `delta_x * delta_p`.
//! Each slot carries a positive operator built from coherent states; the
//! resulting slot probabilities are compared with classical Liouville
//! transport and with classical trajectories under repeated measurement.
//!
//! All computation uses `hbar = 1`; [`UnitScale`] converts to SI.

pub mod coherent;
pub mod compare;
pub mod ehrenfest;
pub mod error;
pub mod grid;
pub mod hamiltonian;
pub mod liouville;
pub mod operator_lab;
pub mod quadrature;
pub mod quantum;
pub mod slots;
pub mod trajectory;
pub mod units;

pub use coherent::{coherent_state, overlap, CoherentStateParams};
pub use error::{Error, Result};
pub use grid::{Grid, Spectral, WaveFunction};
pub use hamiltonian::HamiltonianSpec;
pub use slots::{Slot, SlotDistribution, SlotPartition, SlotWindow};
pub use units::{UnitScale, HBAR};
