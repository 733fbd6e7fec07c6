//! Classical reference dynamics on slots: the finite-difference Liouville
//! equation, a semi-Lagrangian continuum solver and Hamilton's equations.

pub mod characteristics;
pub mod discrete;
pub mod field;
pub mod pushforward;
pub mod semi_lagrangian;

pub use characteristics::{
    characteristics_solve, discrete_characteristics, index_velocity, snap_index, DiscreteCharacteristicsConfig,
    SlotSequence, SnapMode,
};
pub use discrete::{cfl_number, discrete_liouville_evolve, discrete_liouville_step, discrete_liouville_step_with, TimeIntegrator};
pub use field::{classical_hamiltonian_values, total_variation, ClassicalField, PhasePoint, SlotValues};
pub use semi_lagrangian::{coherent_husimi, semi_lagrangian_evolve, semi_lagrangian_series, SemiLagrangianConfig};
pub use pushforward::{pushforward_series, PushforwardConfig};
