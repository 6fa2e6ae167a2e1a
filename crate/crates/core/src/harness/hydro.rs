use rayon::prelude::*;
use serde_json::json;

use super::profile::InitialProfile;
use super::report::{Check, ExperimentReport, Table};
use crate::error::{Error, Result};
use crate::fracop::GridProfile;
use crate::kernel::{build_kernel, ModelParams};
use crate::pde::{reaction_solution, solve_evolution, PdeSpec};
use crate::rng::{replica_seed, replica_seeds};
use crate::sim::{sample_initial, Engine, SimOptions, SnapshotData, SnapshotMode};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HydroOptions {
    /// Allowed sup distance between binned simulation means and the PDE.
    pub tolerance: f64,
    /// Time step of the reference PDE solve.
    pub pde_dt: f64,
}

impl Default for HydroOptions {
    fn default() -> Self {
        HydroOptions {
            tolerance: 0.05,
            pde_dt: 1e-4,
        }
    }
}

/// Number of equal cells of width at least `max(4/N, bin_width)`.
pub fn cell_count(n: usize, bin_width: f64) -> usize {
    let w = (4.0 / n as f64).max(bin_width);
    ((1.0 / w) + 1e-9).floor().max(1.0) as usize
}

/// Averages interior-node values over the cells used for simulation snapshots.
pub fn bin_profile(p: &GridProfile, cells: usize) -> Vec<f64> {
    let mut sum = vec![0.0; cells];
    let mut count = vec![0usize; cells];
    for (i, v) in p.values.iter().enumerate() {
        let b = (((i + 1) * cells) / p.n).min(cells - 1);
        sum[b] += v;
        count[b] += 1;
    }
    sum.iter().zip(&count).map(|(s, c)| s / *c as f64).collect()
}

/// Per-checkpoint, per-cell mean occupation and its standard error.
pub struct BinnedEnsemble {
    pub mean: Vec<Vec<f64>>,
    pub se: Vec<Vec<f64>>,
    pub seeds: Vec<u64>,
}

/// Runs `replicas` independent trajectories from the product measure of `g`
/// and bins every snapshot.  Replica `k` uses the `k`-th split of
/// `master_seed` for its dynamics and a further split for its initial state.
pub fn binned_ensemble(
    params: &ModelParams,
    g: &InitialProfile,
    checkpoints: &[f64],
    replicas: usize,
    cells: usize,
    master_seed: u64,
) -> Result<BinnedEnsemble> {
    let kernel = build_kernel(params.gamma, params.n)?;
    let opts = SimOptions {
        snapshots: SnapshotMode::Auto,
        bins: cells,
        ..Default::default()
    };
    let engine = Engine::new(params, &kernel, opts)?;
    let t_end = *checkpoints
        .last()
        .ok_or_else(|| Error::domain("at least one checkpoint required"))?;
    let seeds = replica_seeds(master_seed, replicas);

    let runs: Vec<Vec<Vec<f64>>> = seeds
        .par_iter()
        .map(|&s| -> Result<Vec<Vec<f64>>> {
            let init = sample_initial(&|u| g.eval(u), params.n, replica_seed(s, 0))?;
            let r = engine.run(&init, t_end, checkpoints, s)?;
            Ok(r.snapshots
                .iter()
                .map(|snap| match &snap.data {
                    SnapshotData::Full(c) => c.binned(cells),
                    SnapshotData::Binned(b) => b.clone(),
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut mean = vec![vec![0.0; cells]; checkpoints.len()];
    let mut se = vec![vec![0.0; cells]; checkpoints.len()];
    let mut column = vec![0.0; replicas];
    for c in 0..checkpoints.len() {
        for b in 0..cells {
            for (k, run) in runs.iter().enumerate() {
                column[k] = run[c][b];
            }
            mean[c][b] = stats::mean(&column);
            se[c][b] = stats::std_err(&column);
        }
    }
    Ok(BinnedEnsemble { mean, se, seeds })
}

fn check_checkpoints(checkpoints: &[f64]) -> Result<()> {
    if checkpoints.is_empty() {
        return Err(Error::domain("at least one checkpoint required"));
    }
    if checkpoints.iter().any(|t| !(*t >= 0.0 && t.is_finite()))
        || checkpoints.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::domain(
            "checkpoints must be nonnegative and strictly increasing",
        ));
    }
    Ok(())
}

fn pde_reference(
    params: &ModelParams,
    g: &InitialProfile,
    checkpoints: &[f64],
    kappa_hat: f64,
    reaction_only: bool,
    dt: f64,
) -> Result<Vec<GridProfile>> {
    let n = params.n;
    let t_end = *checkpoints.last().expect("checked");
    let init = GridProfile::from_fn(n, |u| g.eval(u), params.alpha, params.beta);
    if reaction_only {
        checkpoints
            .iter()
            .map(|t| {
                reaction_solution(
                    &init,
                    *t,
                    kappa_hat,
                    params.gamma,
                    params.alpha,
                    params.beta,
                )
            })
            .collect()
    } else {
        let spec = PdeSpec {
            initial: init,
            ..PdeSpec::new(
                params.gamma,
                params.alpha,
                params.beta,
                kappa_hat,
                n,
                dt,
                t_end,
                |_| 0.0,
            )
        };
        let traj = solve_evolution(&spec)?;
        checkpoints.iter().map(|t| traj.interpolate(*t)).collect()
    }
}

fn compare(
    report: &mut ExperimentReport,
    ens: &BinnedEnsemble,
    reference: &[GridProfile],
    checkpoints: &[f64],
    cells: usize,
    check: Check,
) {
    let mut table = Table::new("profile", &["t", "u", "density", "se", "reference"]);
    let mut worst = 0.0f64;
    for (c, t) in checkpoints.iter().enumerate() {
        let refb = bin_profile(&reference[c], cells);
        let mut sup = 0.0f64;
        for (b, &r) in refb.iter().enumerate() {
            let u = (b as f64 + 0.5) / cells as f64;
            table.push(vec![*t, u, ens.mean[c][b], ens.se[c][b], r]);
            sup = sup.max((ens.mean[c][b] - r).abs());
        }
        worst = worst.max(sup);
        report.metric(format!("sup_distance@t={t}"), sup, check);
        report.info(
            format!("max_se@t={t}"),
            ens.se[c].iter().cloned().fold(0.0, f64::max),
        );
    }
    report.metric("sup_distance", worst, check);
    report.tables.push(table);
}

/// Compares binned mean empirical densities with the hydrodynamic equation:
/// the fractional reaction-diffusion equation for `θ = 0`, the reaction
/// equation for `θ < 0`.
pub fn verify_hydro(
    params: &ModelParams,
    g: &InitialProfile,
    checkpoints: &[f64],
    replicas: usize,
    bin_width: f64,
    master_seed: u64,
    options: &HydroOptions,
) -> Result<ExperimentReport> {
    params.validate()?;
    g.validate()?;
    check_checkpoints(checkpoints)?;
    if replicas < 2 {
        return Err(Error::domain(format!(
            "replicas must be >= 2, got {replicas}"
        )));
    }
    if !(bin_width > 0.0 && bin_width <= 1.0) {
        return Err(Error::domain(format!(
            "bin_width must lie in (0,1], got {bin_width}"
        )));
    }
    let cells = cell_count(params.n, bin_width);
    let reaction_only = params.theta < 0.0;
    let mut report = ExperimentReport::new(
        "verify-hydro",
        json!({
            "params": params, "initial": g, "checkpoints": checkpoints, "replicas": replicas,
            "bin_width": bin_width, "cells": cells, "options": options,
            "reference": if reaction_only { "reaction closed form" } else { "implicit-Euler evolution" },
        }),
    );
    let ens = binned_ensemble(params, g, checkpoints, replicas, cells, master_seed)?;
    let reference = pde_reference(
        params,
        g,
        checkpoints,
        params.kappa,
        reaction_only,
        options.pde_dt,
    )?;
    compare(
        &mut report,
        &ens,
        &reference,
        checkpoints,
        cells,
        Check::AtMost {
            limit: options.tolerance,
        },
    );
    report.replicas = replicas;
    report.master_seed = Some(master_seed);
    report.seeds = ens.seeds;
    report.notes.push(
        "the distance tolerance is a calibrated constant: the convergence in N is proven without a rate".into(),
    );
    Ok(report)
}

/// Exploratory runs with `0 < θ < γ - 1`, compared with the `κ̂ = 0` Dirichlet
/// solution and with the `κ̂ = κ` solution.  No verdicts are issued.
pub fn explore_theta_positive(
    params: &ModelParams,
    g: &InitialProfile,
    checkpoints: &[f64],
    replicas: usize,
    bin_width: f64,
    master_seed: u64,
    options: &HydroOptions,
) -> Result<ExperimentReport> {
    params.validate_ranges()?;
    g.validate()?;
    check_checkpoints(checkpoints)?;
    if !(params.theta > 0.0) {
        return Err(Error::domain(format!(
            "exploratory mode needs theta > 0 (got {}); use verify-hydro for theta <= 0",
            params.theta
        )));
    }
    if !(params.theta < params.gamma - 1.0) {
        return Err(Error::domain(format!(
            "theta must lie in (0, gamma - 1) = (0, {}), got {}",
            params.gamma - 1.0,
            params.theta
        )));
    }
    if replicas == 0 {
        return Err(Error::domain("replicas must be >= 1"));
    }
    if !(bin_width > 0.0 && bin_width <= 1.0) {
        return Err(Error::domain(format!(
            "bin_width must lie in (0,1], got {bin_width}"
        )));
    }
    let cells = cell_count(params.n, bin_width);
    let mut report = ExperimentReport::new(
        "explore-theta",
        json!({
            "params": params, "initial": g, "checkpoints": checkpoints, "replicas": replicas,
            "bin_width": bin_width, "cells": cells, "options": options,
            "time_scale": "N^(gamma+theta)",
        }),
    );
    report.exploratory = true;
    let ens = binned_ensemble(params, g, checkpoints, replicas, cells, master_seed)?;
    let dirichlet = pde_reference(params, g, checkpoints, 0.0, false, options.pde_dt)?;
    compare(
        &mut report,
        &ens,
        &dirichlet,
        checkpoints,
        cells,
        Check::Info,
    );
    let with_kappa = pde_reference(params, g, checkpoints, params.kappa, false, options.pde_dt)?;
    for (c, t) in checkpoints.iter().enumerate() {
        let refb = bin_profile(&with_kappa[c], cells);
        let d = ens.mean[c]
            .iter()
            .zip(&refb)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        report.info(format!("sup_distance_to_kappa_solution@t={t}"), d);
    }
    report.replicas = replicas;
    report.master_seed = Some(master_seed);
    report.seeds = ens.seeds;
    report
        .notes
        .push("exploratory: no hydrodynamic limit is known for theta > 0".into());
    Ok(report)
}
