use serde::{Deserialize, Serialize};

use super::grid_potentials;
use super::linear::SpdSolver;
use crate::error::{Error, Result};
use crate::fracop::{build_operator, GridProfile, OperatorMode};
use crate::kernel::check_gamma;

use super::RANGE_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StationaryMode {
    /// Regional operator with potentials for `κ̂ > 0`, ghost nodes for `κ̂ = 0`.
    #[default]
    Auto,
    /// Ghost nodes carrying `α, β`, plus the potentials when `κ̂ > 0`.
    Pinned,
    /// Regional operator with potentials only; singular at `κ̂ = 0`.
    Regional,
}

/// Solves `(A - κ̂ V_1) ρ̄ = -κ̂ V_0` (regional) or `(A_pin - κ̂ V_1) ρ̄ = -κ̂ V_0 - b`
/// (ghost nodes) on the interior nodes of an `N` grid.
pub fn solve_stationary(
    gamma: f64,
    alpha: f64,
    beta: f64,
    kappa_hat: f64,
    n_grid: usize,
    mode: StationaryMode,
) -> Result<GridProfile> {
    check_gamma(gamma)?;
    if !(kappa_hat >= 0.0 && kappa_hat.is_finite()) {
        return Err(Error::domain(format!(
            "kappa_hat must be >= 0, got {kappa_hat}"
        )));
    }
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::domain(format!("{name} must lie in (0,1), got {v}")));
        }
    }
    let pinned = match mode {
        StationaryMode::Auto => kappa_hat == 0.0,
        StationaryMode::Pinned => true,
        StationaryMode::Regional => false,
    };
    if !pinned && kappa_hat == 0.0 {
        return Err(Error::Numerical(
            "regional operator without reaction is singular on constants".into(),
        ));
    }
    let op_mode = if pinned {
        OperatorMode::PinnedBoundary { alpha, beta }
    } else {
        OperatorMode::Regional
    };
    let op = build_operator(n_grid, gamma, op_mode)?;
    let (v0, v1) = grid_potentials(gamma, alpha, beta, n_grid)?;

    let diag: Vec<f64> = v1.iter().map(|v| kappa_hat * v).collect();
    let mut rhs: Vec<f64> = v0.iter().map(|v| kappa_hat * v).collect();
    if let Some(b) = op.boundary_vector() {
        rhs.iter_mut().zip(b).for_each(|(r, b)| *r += b);
    }
    let values = SpdSolver::new(Some(&op), diag, 1.0)?.solve(&rhs)?;

    let (lo, hi) = (alpha.min(beta), alpha.max(beta));
    if let Some(bad) = values
        .iter()
        .position(|v| !(*v >= lo - RANGE_TOL && *v <= hi + RANGE_TOL))
    {
        return Err(Error::Numerical(format!(
            "stationary value {} at node {} leaves [{lo}, {hi}]",
            values[bad],
            bad + 1
        )));
    }
    GridProfile::new(n_grid, values, alpha, beta)
}
