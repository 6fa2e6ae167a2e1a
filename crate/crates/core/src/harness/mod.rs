//! Experiment drivers that check the limit theorems numerically and produce
//! self-contained reports.

mod consistency;
mod energy;
mod hydro;
mod profile;
mod report;
mod sweeps;

pub use consistency::{operator_consistency, ASSERTED_GAMMA_MAX};
pub use energy::{energy_report, energy_sweep, EnergyInput};
pub use hydro::{
    bin_profile, binned_ensemble, cell_count, explore_theta_positive, verify_hydro, BinnedEnsemble,
    HydroOptions,
};
pub use profile::InitialProfile;
pub use report::{Check, ExperimentReport, Metric, Table};
pub use sweeps::{
    sweep_evolution, sweep_stationary, EvolutionSweep, LARGE_KAPPA_SLOPE, SMALL_KAPPA_SLOPE,
};
