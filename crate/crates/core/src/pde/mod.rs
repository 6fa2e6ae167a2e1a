//! Solvers for the limiting equations: the fractional reaction-diffusion
//! evolution, the pure reaction equation, the stationary problem, and the
//! weak-form residuals used to validate them.

mod evolution;
mod linear;
mod residual;
mod stationary;

pub use evolution::{
    reaction_solution, solve_evolution, solve_evolution_rescaled, solve_reaction_evolution,
    EvolutionResult, PdeSpec, SchemeMeta, RANGE_TOL,
};
pub use linear::SpdSolver;
pub use residual::{weak_residual, EquationParams, ResidualInput, ResidualKind, TestFunction};
pub use stationary::{solve_stationary, StationaryMode};

use crate::error::Result;
use crate::kernel::{normalizing_constant, ContinuumPotentials};

/// `(V_0(u_i), V_1(u_i))` at the interior nodes of an `N` grid.
pub fn grid_potentials(
    gamma: f64,
    alpha: f64,
    beta: f64,
    n: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let c = normalizing_constant(gamma)?;
    let pot = ContinuumPotentials::with_constant(gamma, alpha, beta, c);
    let h = 1.0 / n as f64;
    Ok((1..n)
        .map(|i| (pot.v0(i as f64 * h), pot.v1(i as f64 * h)))
        .unzip())
}
