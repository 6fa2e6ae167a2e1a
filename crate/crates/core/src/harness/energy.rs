use serde_json::json;

use super::profile::InitialProfile;
use super::report::{Check, ExperimentReport, Table};
use crate::error::{Error, Result};
use crate::fracop::{norms, GridProfile};
use crate::pde::{solve_evolution, PdeSpec};

/// A density trajectory, from a PDE solve or from simulation means.
#[derive(Debug, Clone)]
pub struct EnergyInput {
    pub kappa: f64,
    pub times: Vec<f64>,
    pub profiles: Vec<GridProfile>,
}

/// Per-subinterval `∫_I ‖ρ_t‖²_{γ/2} dt` and the Hardy integral
/// `∫_I ∫ (α-ρ)²/u^γ + (β-ρ)²/(1-u)^γ du dt`, checked against `c|I|(κ+1)`
/// and `c'|I|(κ+1)/κ` with constants fitted once at `fit_kappa`.
pub fn energy_report(
    inputs: &[EnergyInput],
    gamma: f64,
    alpha: f64,
    beta: f64,
    subintervals: usize,
    fit_kappa: f64,
) -> Result<ExperimentReport> {
    if subintervals == 0 {
        return Err(Error::domain("subintervals must be >= 1"));
    }
    for inp in inputs {
        if inp.times.len() < 10 || inp.times.len() != inp.profiles.len() {
            return Err(Error::domain(
                "each trajectory needs at least 10 checkpoints, one profile per time",
            ));
        }
        if inp.times.len() - 1 < subintervals {
            return Err(Error::domain("more subintervals than recorded steps"));
        }
    }
    let fit = inputs
        .iter()
        .position(|i| i.kappa == fit_kappa)
        .ok_or_else(|| Error::domain(format!("no trajectory at the fitting kappa {fit_kappa}")))?;

    // (kappa, |I|, energy, hardy) per subinterval.
    let mut rows: Vec<Vec<(f64, f64, f64)>> = Vec::new();
    for inp in inputs {
        let per_time: Vec<(f64, f64)> = inp
            .profiles
            .iter()
            .map(|p| {
                norms(p, gamma, alpha, beta)
                    .map(|m| (m.seminorm_gamma_half.powi(2), m.hardy_left + m.hardy_right))
            })
            .collect::<Result<_>>()?;
        let last = inp.times.len() - 1;
        let edges: Vec<usize> = (0..=subintervals)
            .map(|k| (k * last + subintervals / 2) / subintervals)
            .collect();
        let mut parts = Vec::new();
        for w in edges.windows(2) {
            let (mut e, mut hd) = (0.0, 0.0);
            for j in w[0]..w[1] {
                let dt = inp.times[j + 1] - inp.times[j];
                e += 0.5 * dt * (per_time[j].0 + per_time[j + 1].0);
                hd += 0.5 * dt * (per_time[j].1 + per_time[j + 1].1);
            }
            parts.push((inp.times[w[1]] - inp.times[w[0]], e, hd));
        }
        rows.push(parts);
    }

    let energy_env = |k: f64| k + 1.0;
    let hardy_env = |k: f64| (k + 1.0) / k;
    let kf = inputs[fit].kappa;
    let c = rows[fit]
        .iter()
        .map(|(len, e, _)| e / (len * energy_env(kf)))
        .fold(0.0, f64::max);
    let c_h = rows[fit]
        .iter()
        .map(|(len, _, h)| h / (len * hardy_env(kf)))
        .fold(0.0, f64::max);

    let mut report = ExperimentReport::new(
        "energy",
        json!({"gamma": gamma, "alpha": alpha, "beta": beta, "subintervals": subintervals,
               "fit_kappa": fit_kappa, "kappas": inputs.iter().map(|i| i.kappa).collect::<Vec<_>>()}),
    );
    report.info("energy_constant", c);
    report.info("hardy_constant", c_h);
    let ratio = |v: f64, env: f64| {
        if env == 0.0 {
            if v == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            v / env
        }
    };
    let mut table = Table::new(
        "energy",
        &[
            "kappa",
            "t_start",
            "length",
            "energy_integral",
            "hardy_integral",
        ],
    );
    for (inp, parts) in inputs.iter().zip(&rows) {
        let k = inp.kappa;
        let mut t0 = inp.times[0];
        let (mut re, mut rh, mut total) = (0.0f64, 0.0f64, 0.0);
        for (len, e, hd) in parts {
            table.push(vec![k, t0, *len, *e, *hd]);
            t0 += len;
            total += e;
            re = re.max(ratio(*e, c * len * energy_env(k)));
            rh = rh.max(ratio(*hd, c_h * len * hardy_env(k)));
        }
        report.info(format!("energy_integral@kappa={k}"), total);
        report.metric(
            format!("energy_envelope_ratio@kappa={k}"),
            re,
            Check::AtMost { limit: 1.0 },
        );
        report.metric(
            format!("hardy_envelope_ratio@kappa={k}"),
            rh,
            Check::AtMost { limit: 1.0 },
        );
    }
    report.tables.push(table);
    Ok(report)
}

/// Solves the `θ = 0` evolution at each `κ` and runs [`energy_report`] on the results.
#[allow(clippy::too_many_arguments)]
pub fn energy_sweep(
    gamma: f64,
    alpha: f64,
    beta: f64,
    initial: &InitialProfile,
    kappas: &[f64],
    t_end: f64,
    n_grid: usize,
    dt: f64,
    subintervals: usize,
) -> Result<ExperimentReport> {
    initial.validate()?;
    let inputs: Vec<EnergyInput> = kappas
        .iter()
        .map(|&k| {
            let r = solve_evolution(&PdeSpec::new(
                gamma,
                alpha,
                beta,
                k,
                n_grid,
                dt,
                t_end,
                |u| initial.eval(u),
            ))?;
            Ok(EnergyInput {
                kappa: k,
                times: r.times,
                profiles: r.profiles,
            })
        })
        .collect::<Result<_>>()?;
    let mut report = energy_report(&inputs, gamma, alpha, beta, subintervals, 1.0)?;
    report.parameters["initial"] = serde_json::to_value(initial).expect("serializable");
    report.parameters["T"] = json!(t_end);
    report.parameters["N_grid"] = json!(n_grid);
    report.parameters["dt"] = json!(dt);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_trajectory_has_zero_energy() {
        let r = energy_sweep(
            1.5,
            0.3,
            0.3,
            &InitialProfile::Constant { value: 0.3 },
            &[0.5, 1.0],
            0.1,
            32,
            0.01,
            3,
        )
        .unwrap();
        assert!(r.value("energy_integral@kappa=1").unwrap() < 1e-25);
        assert!(r.value("energy_integral@kappa=0.5").unwrap() < 1e-25);
        assert!(r.passed());
    }

    #[test]
    fn fitted_kappa_is_within_its_own_envelope() {
        let r = energy_sweep(
            1.5,
            0.2,
            0.8,
            &InitialProfile::Constant { value: 0.5 },
            &[1.0, 2.0],
            0.1,
            64,
            0.01,
            5,
        )
        .unwrap();
        assert!(r.value("energy_envelope_ratio@kappa=1").unwrap() <= 1.0 + 1e-12);
        assert!(r.value("hardy_envelope_ratio@kappa=1").unwrap() <= 1.0 + 1e-12);
    }

    #[test]
    fn needs_ten_checkpoints() {
        let g = InitialProfile::Constant { value: 0.5 };
        assert!(energy_sweep(1.5, 0.2, 0.8, &g, &[1.0], 0.05, 32, 0.01, 2).is_err());
    }
}
