//! Boundary-driven exclusion process with long jumps: lattice simulation,
//! discrete regional fractional operators, solvers for the limiting
//! reaction-diffusion equations and experiment drivers comparing the two.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fracop;
pub mod harness;
pub mod kernel;
pub mod pde;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod testfn;

pub use error::{Error, Result};
pub use fracop::{
    build_operator, norms, quadrature_regional, GridProfile, Norms, OperatorMatrix, OperatorMode,
};
pub use harness::{Check, ExperimentReport, InitialProfile, Metric, Table};
pub use kernel::{
    build_kernel, continuum_potentials, ContinuumPotentials, JumpKernel, ModelParams, Potentials,
};
pub use pde::{
    reaction_solution, solve_evolution, solve_stationary, weak_residual, EvolutionResult, PdeSpec,
    StationaryMode,
};
pub use sim::{
    empirical_pairing, sample_initial, simulate, track_martingale, Configuration, SimResult,
};
