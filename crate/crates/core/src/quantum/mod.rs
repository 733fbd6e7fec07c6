//! Full-Hamiltonian evolution and slot measurements of lattice states.

pub mod discretization;
pub mod husimi;
pub mod kernel;
pub mod measurement;
pub mod propagator;

pub use discretization::{convergence_exponent, slot_sum};
pub use husimi::{husimi, husimi_slot_probability, HusimiEvaluator, HusimiField, HusimiLattice};
pub use kernel::SlotKernel;
pub use measurement::{
    coarse_observable_expectation, measure_collapse, measure_with, project, sample_slot, slot_probabilities,
    update_state, CollapseRule,
};
pub use propagator::{energy, evolve, Propagator, PropagatorConfig, SplitScheme, EDGE_MASS_LIMIT};
