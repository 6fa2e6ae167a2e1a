use serde::{Deserialize, Serialize};
use serde_json::json;

use super::profile::InitialProfile;
use super::report::{Check, ExperimentReport, Table};
use crate::error::{Error, Result};
use crate::fracop::{seminorm_sq, v1_weighted_sq, GridProfile};
use crate::kernel::{normalizing_constant, ContinuumPotentials};
use crate::pde::{
    reaction_solution, solve_evolution, solve_evolution_rescaled, solve_reaction_evolution,
    solve_stationary, EvolutionResult, PdeSpec, StationaryMode,
};
use crate::stats::loglog_slope;

/// Rate window for `‖ρ̄^κ - ρ̄^∞‖_{V_1}` and the `κ → ∞` evolution ladder.
pub const LARGE_KAPPA_SLOPE: Check = Check::Within {
    lo: -0.75,
    hi: -0.25,
};
/// Rate window for `‖ρ̄^κ - ρ̄^0‖_{γ/2}`.
pub const SMALL_KAPPA_SLOPE: Check = Check::Within { lo: 0.25, hi: 0.75 };

fn validate_kappas(kappas: &[f64]) -> Result<()> {
    if kappas.is_empty() || kappas.iter().any(|k| !(*k > 0.0 && k.is_finite())) {
        return Err(Error::domain("kappas must be positive and finite"));
    }
    Ok(())
}

fn rho_bar_inf(gamma: f64, alpha: f64, beta: f64, n: usize) -> Result<GridProfile> {
    let pot = ContinuumPotentials::new(gamma, alpha, beta)?;
    Ok(GridProfile::from_fn(n, |u| pot.rho_bar_inf(u), alpha, beta))
}

/// Stationary profiles across `κ`: distance to `ρ̄^∞` in `L²_{V_1}` for `κ > 1`,
/// distance to the ghost-node `ρ̄^0` in `H^{γ/2}` for `κ < 1`, and the gap
/// between the ghost-node `ρ̄^0` and its linear `κ → 0` extrapolation.
pub fn sweep_stationary(
    gamma: f64,
    alpha: f64,
    beta: f64,
    kappas: &[f64],
    n_grid: usize,
) -> Result<ExperimentReport> {
    validate_kappas(kappas)?;
    let (kmin, kmax) = kappas
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), k| (a.min(*k), b.max(*k)));
    if kmax / kmin < 100.0 * (1.0 - 1e-12) {
        return Err(Error::domain("kappas must span at least two decades"));
    }
    let mut kappas = kappas.to_vec();
    kappas.sort_by(f64::total_cmp);
    let c = normalizing_constant(gamma)?;
    let pot = ContinuumPotentials::with_constant(gamma, alpha, beta, c);
    let bar_inf = rho_bar_inf(gamma, alpha, beta, n_grid)?;
    let bar0 = solve_stationary(gamma, alpha, beta, 0.0, n_grid, StationaryMode::Auto)?;

    let mut report = ExperimentReport::new(
        "sweep-stationary",
        json!({"gamma": gamma, "alpha": alpha, "beta": beta, "kappas": kappas, "N_grid": n_grid}),
    );
    let mut table = Table::new(
        "stationary",
        &[
            "kappa",
            "v1_distance_to_inf",
            "seminorm_distance_to_zero",
            "sup_distance_to_inf",
            "sup_distance_to_zero",
            "seminorm_distance_to_zero_pinned",
        ],
    );
    let mut profiles = Vec::new();
    for &k in &kappas {
        let rho = solve_stationary(gamma, alpha, beta, k, n_grid, StationaryMode::Auto)?;
        let pinned = solve_stationary(gamma, alpha, beta, k, n_grid, StationaryMode::Pinned)?;
        let d_inf = rho.difference(&bar_inf)?;
        let d_0 = rho.difference(&bar0)?;
        let d_p = pinned.difference(&bar0)?;
        table.push(vec![
            k,
            v1_weighted_sq(&d_inf.values, n_grid, &pot).sqrt(),
            seminorm_sq(&d_0.values, n_grid, gamma, c).sqrt(),
            rho.sup_distance(&bar_inf)?,
            rho.sup_distance(&bar0)?,
            seminorm_sq(&d_p.values, n_grid, gamma, c).sqrt(),
        ]);
        profiles.push(rho);
    }

    let col = |j: usize, pick: &dyn Fn(f64) -> bool| -> (Vec<f64>, Vec<f64>) {
        table
            .rows
            .iter()
            .filter(|r| pick(r[0]))
            .map(|r| (r[0], r[j]))
            .unzip()
    };
    if alpha == beta {
        let worst = table
            .rows
            .iter()
            .flat_map(|r| r[1..].iter().cloned())
            .fold(0.0, f64::max);
        report.metric("max_distance", worst, Check::AtMost { limit: 1e-10 });
    } else {
        let (kl, vl) = col(1, &|k| k > 1.0);
        if kl.len() >= 2 {
            report.metric(
                "slope_v1_large_kappa",
                loglog_slope(&kl, &vl),
                LARGE_KAPPA_SLOPE,
            );
        }
        let (ks, vs) = col(2, &|k| k < 1.0);
        if ks.len() >= 2 {
            report.metric(
                "slope_seminorm_small_kappa",
                loglog_slope(&ks, &vs),
                SMALL_KAPPA_SLOPE,
            );
            let (_, vp) = col(5, &|k| k < 1.0);
            report
                .info("slope_seminorm_small_kappa_pinned", loglog_slope(&ks, &vp))
                .note = Some("ghost nodes plus potentials, for comparison".into());

            // Linear extrapolation to κ = 0 through the two smallest κ.
            let (k1, k2) = (kappas[0], kappas[1]);
            let (p1, p2) = (&profiles[0], &profiles[1]);
            let values = p1
                .values
                .iter()
                .zip(&p2.values)
                .map(|(a, b)| a - k1 * (b - a) / (k2 - k1))
                .collect();
            let extrapolated = GridProfile {
                values,
                ..p1.clone()
            };
            report.metric(
                "ghost_vs_extrapolated_gap",
                bar0.sup_distance(&extrapolated)?,
                Check::AtMost { limit: 0.02 },
            );
        }
        if kmax >= 1e4 {
            let last = table.rows.last().expect("nonempty")[3];
            report.metric(
                format!("sup_distance_to_inf@kappa={kmax}"),
                last,
                Check::AtMost { limit: 0.01 },
            );
        }
    }
    report.tables.push(table);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionSweep {
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub initial: InitialProfile,
    pub kappas: Vec<f64>,
    #[serde(rename = "T")]
    pub t_end: f64,
    #[serde(rename = "N_grid")]
    pub n_grid: usize,
    pub dt: f64,
}

/// `∫_0^T f(k) dt` over the recorded times of two trajectories on a common time grid.
fn time_integral(
    a: &EvolutionResult,
    b: &EvolutionResult,
    f: impl Fn(&[f64]) -> f64,
) -> Result<f64> {
    if a.times.len() != b.times.len() {
        return Err(Error::Consistency(
            "trajectories recorded on different time grids".into(),
        ));
    }
    let vals: Vec<f64> = a
        .profiles
        .iter()
        .zip(&b.profiles)
        .map(|(p, q)| p.difference(q).map(|d| f(&d.values)))
        .collect::<Result<_>>()?;
    Ok(a.times
        .windows(2)
        .zip(vals.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum())
}

/// Time-integrated distances along the `κ → 0` and `κ → ∞` ladders.
pub fn sweep_evolution(sweep: &EvolutionSweep) -> Result<ExperimentReport> {
    validate_kappas(&sweep.kappas)?;
    sweep.initial.validate()?;
    let EvolutionSweep {
        gamma,
        alpha,
        beta,
        n_grid: n,
        dt,
        t_end,
        ..
    } = *sweep;
    let c = normalizing_constant(gamma)?;
    let pot = ContinuumPotentials::with_constant(gamma, alpha, beta, c);
    let h = 1.0 / n as f64;
    let l2_sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>() * h;
    let v1_sq = |v: &[f64]| v1_weighted_sq(v, n, &pot);
    let spec = |k: f64| {
        PdeSpec::new(gamma, alpha, beta, k, n, dt, t_end, |u| {
            sweep.initial.eval(u)
        })
    };

    let mut report = ExperimentReport::new(
        "sweep-evolution",
        serde_json::to_value(sweep).expect("serializable"),
    );
    let flat = alpha == beta && (0..=16).all(|i| sweep.initial.eval(i as f64 / 16.0) == alpha);
    let mut worst = 0.0f64;

    let mut small: Vec<f64> = sweep.kappas.iter().cloned().filter(|k| *k < 1.0).collect();
    small.sort_by(|a, b| b.total_cmp(a));
    if !small.is_empty() {
        let rho0 = solve_evolution(&spec(0.0))?;
        let mut table = Table::new("kappa_to_zero", &["kappa", "integral_l2_sq"]);
        let mut ints = Vec::new();
        for &k in &small {
            let rk = solve_evolution(&spec(k))?;
            let i = time_integral(&rk, &rho0, l2_sq)?;
            worst = worst.max(i);
            table.push(vec![k, i]);
            ints.push(i);
        }
        if !flat {
            for w in 0..small.len().saturating_sub(1) {
                let expected = small[w] / small[w + 1];
                report.metric(
                    format!("ratio@kappa={}/{}", small[w], small[w + 1]),
                    ints[w] / ints[w + 1],
                    Check::Within {
                        lo: 0.75 * expected,
                        hi: 1.25 * expected,
                    },
                );
            }
        }
        report.tables.push(table);
    }

    let mut large: Vec<f64> = sweep.kappas.iter().cloned().filter(|k| *k > 1.0).collect();
    large.sort_by(f64::total_cmp);
    if !large.is_empty() {
        // The reference is stepped with the same implicit scheme, so that the
        // time-discretization error cancels; the closed form is reported alongside.
        let reference = solve_reaction_evolution(&spec(1.0))?;
        let g0 = &reference.profiles[0];
        let closed: Vec<GridProfile> = reference
            .times
            .iter()
            .map(|t| reaction_solution(g0, *t, 1.0, gamma, alpha, beta))
            .collect::<Result<_>>()?;
        let closed_traj = EvolutionResult {
            profiles: closed,
            ..reference.clone()
        };
        let mut table = Table::new(
            "kappa_to_infinity",
            &[
                "kappa",
                "integral_v1_sq",
                "integral_v1_sq_closed_form",
                "integral_l2_sq",
            ],
        );
        for &k in &large {
            let rk = solve_evolution_rescaled(&spec(k))?;
            let iv = time_integral(&rk, &reference, v1_sq)?;
            let ic = time_integral(&rk, &closed_traj, v1_sq)?;
            let il = time_integral(&rk, &reference, l2_sq)?;
            worst = worst.max(iv);
            table.push(vec![k, iv, ic, il]);
        }
        report
            .info(
                "reference_gap_v1_sq",
                time_integral(&reference, &closed_traj, v1_sq)?,
            )
            .note = Some("implicit-Euler reaction reference vs closed form".into());
        if !flat && large.len() >= 2 {
            let col = |j: usize| table.rows.iter().map(|r| r[j]).collect::<Vec<f64>>();
            report.metric(
                "slope_v1_large_kappa",
                loglog_slope(&large, &col(1)),
                LARGE_KAPPA_SLOPE,
            );
            report.info(
                "slope_v1_large_kappa_closed_form",
                loglog_slope(&large, &col(2)),
            );
            report.info("slope_l2_large_kappa", loglog_slope(&large, &col(3)));
        }
        report.tables.push(table);
    }
    if flat {
        report.metric("max_distance", worst, Check::AtMost { limit: 1e-10 });
    }
    Ok(report)
}
