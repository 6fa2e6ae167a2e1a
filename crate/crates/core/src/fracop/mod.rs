//! Discrete nonlocal operators on the uniform grid, fractional norms and a
//! quadrature oracle for the continuum regional operator.

mod grid;
mod norms;
mod operator;
mod quadrature;

pub use grid::GridProfile;
pub use norms::{norms, seminorm_sq, v1_weighted_sq, Norms};
pub use operator::{build_operator, OperatorMatrix, OperatorMode, DENSE_LIMIT};
pub use quadrature::{gauss_kronrod, quadrature_regional};
