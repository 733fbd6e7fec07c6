//! Dense-matrix realization of slot operators and the operator identities
//! that underlie the classical limit.

mod lab;
mod matrix;
mod povm;
mod projectivity;

pub use lab::{fluctuation_operators, CommutatorResidual, DiscreteDerivativeError, OperatorLab};
pub use matrix::OperatorMatrix;
pub use povm::{PovmBuilder, QuadratureRule, QuadratureScheme, Rect, Stripes, EDGE_MARGIN};
pub use projectivity::{
    overlap_profile, projectivity_error_asymptote, projectivity_error_closed_form,
    projectivity_error_numeric,
};
