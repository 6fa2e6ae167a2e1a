use std::fmt::Write as _;

use anyhow::{bail, Context};
use clap::ValueEnum;
use levyx_core::harness::{
    energy_sweep, explore_theta_positive, operator_consistency, sweep_evolution, sweep_stationary,
    verify_hydro, EvolutionSweep,
};
use levyx_core::pde::{solve_evolution_rescaled, solve_reaction_evolution};
use levyx_core::rng::{replica_seed, replica_seeds};
use levyx_core::sim::{Engine, SimOptions, SnapshotData};
use levyx_core::{
    build_kernel, build_operator, reaction_solution, sample_initial, solve_evolution,
    solve_stationary, ContinuumPotentials, EvolutionResult, ExperimentReport, GridProfile,
    OperatorMode, PdeSpec,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{Config, Equation, SweepKind};
use crate::manifest::Outputs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Particle system snapshots for each replica.
    Simulate,
    /// Time-dependent PDE trajectory.
    Solve,
    /// Stationary profile.
    Stationary,
    /// Binned simulation means against the hydrodynamic equation.
    VerifyHydro,
    /// Stationary, evolution or energy sweep over kappa.
    SweepKappa,
    /// Discrete operator against the quadrature oracle.
    OperatorCheck,
    /// Exploratory runs with theta > 0.
    ExploreTheta,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Solve => "solve",
            Command::Stationary => "stationary",
            Command::VerifyHydro => "verify-hydro",
            Command::SweepKappa => "sweep-kappa",
            Command::OperatorCheck => "operator-check",
            Command::ExploreTheta => "explore-theta",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutFormat {
    #[default]
    Csv,
    Json,
}

impl OutFormat {
    pub fn name(self) -> &'static str {
        match self {
            OutFormat::Csv => "csv",
            OutFormat::Json => "json",
        }
    }
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub outputs: Outputs,
    pub replica_seeds: Vec<u64>,
    /// Names of asserted metrics that failed.
    pub failures: Vec<String>,
}

pub fn run(command: Command, cfg: &Config, format: OutFormat) -> anyhow::Result<Outcome> {
    match command {
        Command::Simulate => simulate(cfg, format),
        Command::Solve => solve(cfg, format),
        Command::Stationary => stationary(cfg, format),
        Command::VerifyHydro => {
            let h = &cfg.hydro;
            let r = verify_hydro(
                &cfg.params(),
                &cfg.initial,
                &h.checkpoints,
                cfg.replicas,
                h.bin_width,
                cfg.seed,
                &h.options(),
            )?;
            Ok(report_outcome(r, format))
        }
        Command::SweepKappa => {
            let s = &cfg.sweep;
            let r = match s.kind {
                SweepKind::Stationary => {
                    sweep_stationary(cfg.gamma, cfg.alpha, cfg.beta, &s.kappas, s.n_grid)?
                }
                SweepKind::Evolution => sweep_evolution(&EvolutionSweep {
                    gamma: cfg.gamma,
                    alpha: cfg.alpha,
                    beta: cfg.beta,
                    initial: cfg.initial,
                    kappas: s.kappas.clone(),
                    t_end: s.t_end,
                    n_grid: s.n_grid,
                    dt: s.dt,
                })?,
                SweepKind::Energy => energy_sweep(
                    cfg.gamma,
                    cfg.alpha,
                    cfg.beta,
                    &cfg.initial,
                    &s.kappas,
                    s.t_end,
                    s.n_grid,
                    s.dt,
                    s.subintervals,
                )?,
            };
            Ok(report_outcome(r, format))
        }
        Command::OperatorCheck => operator_check(cfg, format),
        Command::ExploreTheta => {
            let h = &cfg.hydro;
            let r = explore_theta_positive(
                &cfg.params(),
                &cfg.initial,
                &h.checkpoints,
                cfg.replicas,
                h.bin_width,
                cfg.seed,
                &h.options(),
            )?;
            Ok(report_outcome(r, format))
        }
    }
}

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable output");
    s.push('\n');
    s.into_bytes()
}

fn report_outcome(report: ExperimentReport, format: OutFormat) -> Outcome {
    let mut out = Outcome {
        replica_seeds: report.seeds.clone(),
        failures: report
            .failures()
            .iter()
            .map(|m| format!("{} = {:e} ({})", m.name, m.value, m.check.describe()))
            .collect(),
        ..Default::default()
    };
    for t in &report.tables {
        match format {
            OutFormat::Csv => {
                let mut buf = Vec::new();
                t.write_csv(&mut buf).expect("writing to memory");
                out.outputs.add(format!("{}.csv", t.name), buf);
            }
            OutFormat::Json => out.outputs.add(format!("{}.json", t.name), json_bytes(t)),
        }
    }
    out.outputs.add("report.json", json_bytes(&report));
    out
}

fn simulate(cfg: &Config, format: OutFormat) -> anyhow::Result<Outcome> {
    if cfg.replicas == 0 {
        bail!("replicas must be >= 1");
    }
    let params = cfg.params();
    params.validate_ranges()?;
    let s = &cfg.simulate;
    let kernel = build_kernel(params.gamma, params.n)?;
    let options = SimOptions {
        reservoirs: s.reservoirs,
        record_events: false,
        snapshots: s.snapshots,
        bins: s.bins,
    };
    let engine = Engine::new(&params, &kernel, options)?;
    let seeds = replica_seeds(cfg.seed, cfg.replicas);
    let runs = seeds
        .par_iter()
        .map(|&seed| {
            let init = sample_initial(&|u| cfg.initial.eval(u), params.n, replica_seed(seed, 0))?;
            engine.run(&init, s.t_end, &s.observe, seed)
        })
        .collect::<levyx_core::Result<Vec<_>>>()?;

    let width = (cfg.replicas - 1).to_string().len().max(3);
    let mut out = Outcome {
        replica_seeds: seeds.clone(),
        ..Default::default()
    };
    let mut summary = Vec::new();
    for (k, r) in runs.iter().enumerate() {
        let stem = format!("snapshots_{k:0width$}");
        match format {
            OutFormat::Csv => out.outputs.add(
                format!("{stem}.csv"),
                snapshots_csv(r.snapshots.iter().map(|s| (s.t, &s.data))),
            ),
            OutFormat::Json => out.outputs.add(
                format!("{stem}.json"),
                json_bytes(&snapshots_json(&r.snapshots)),
            ),
        }
        let particles: Vec<Option<usize>> = r
            .snapshots
            .iter()
            .map(|s| match &s.data {
                SnapshotData::Full(c) => Some(c.particle_count()),
                SnapshotData::Binned(_) => None,
            })
            .collect();
        summary.push(json!({
            "replica": k,
            "seed": r.seed,
            "events": r.event_count,
            "microscopic_time": r.elapsed_micro_time,
            "initial_particles": r.initial.particle_count(),
            "particles": particles,
            "pair_proposals": r.stats.pair_proposals,
            "swaps": r.stats.swaps,
            "flip_proposals": r.stats.flip_proposals,
            "flips": r.stats.flips,
        }));
    }
    out.outputs.add(
        "summary.json",
        json_bytes(&json!({
            "params": params,
            "T": s.t_end,
            "observe": s.observe,
            "time_scale": params.time_scale(),
            "replicas": summary,
        })),
    );
    Ok(out)
}

fn snapshots_csv<'a>(snaps: impl Iterator<Item = (f64, &'a SnapshotData)>) -> Vec<u8> {
    let mut s = String::new();
    let mut header = false;
    for (t, data) in snaps {
        match data {
            SnapshotData::Full(c) => {
                if !header {
                    s.push_str("t,site,occupied\n");
                    header = true;
                }
                for x in 1..c.n() {
                    let _ = writeln!(s, "{t},{x},{}", u8::from(c.get(x)));
                }
            }
            SnapshotData::Binned(b) => {
                if !header {
                    s.push_str("t,u,density\n");
                    header = true;
                }
                let m = b.len() as f64;
                for (i, d) in b.iter().enumerate() {
                    let _ = writeln!(s, "{t},{},{d}", (i as f64 + 0.5) / m);
                }
            }
        }
    }
    s.into_bytes()
}

fn snapshots_json(snaps: &[levyx_core::sim::Snapshot]) -> serde_json::Value {
    let items: Vec<_> = snaps
        .iter()
        .map(|s| match &s.data {
            SnapshotData::Full(c) => {
                json!({"t": s.t, "occupied": c.occupancy().iter().map(|b| u8::from(*b)).collect::<Vec<_>>()})
            }
            SnapshotData::Binned(b) => json!({"t": s.t, "density": b}),
        })
        .collect();
    json!(items)
}

fn solve(cfg: &Config, format: OutFormat) -> anyhow::Result<Outcome> {
    let p = &cfg.pde;
    let kh = p.kappa_hat.context("pde.kappa_hat unresolved")?;
    let mut spec = PdeSpec::new(
        cfg.gamma,
        cfg.alpha,
        cfg.beta,
        kh,
        p.n_grid,
        p.dt,
        p.t_end,
        |u| cfg.initial.eval(u),
    );
    spec.record_every = p.record_every;
    let equation = match p.equation {
        Equation::Auto if cfg.theta < 0.0 => Equation::ReactionExact,
        Equation::Auto => Equation::Dirichlet,
        e => e,
    };
    let (times, profiles, meta): (Vec<f64>, Vec<GridProfile>, serde_json::Value) = match equation {
        Equation::ReactionExact => {
            spec.validate()?;
            let (steps, dt) = spec.step_plan();
            let times: Vec<f64> = (0..=steps)
                .filter(|k| *k == 0 || k % spec.record_every == 0 || *k == steps)
                .map(|k| k as f64 * dt)
                .collect();
            let profiles = times
                .iter()
                .map(|&t| reaction_solution(&spec.initial, t, kh, cfg.gamma, cfg.alpha, cfg.beta))
                .collect::<levyx_core::Result<Vec<_>>>()?;
            (
                times,
                profiles,
                json!({"scheme": "closed-form-reaction", "dt": dt, "steps": steps}),
            )
        }
        e => {
            let r: EvolutionResult = match e {
                Equation::Dirichlet => solve_evolution(&spec)?,
                Equation::Rescaled => solve_evolution_rescaled(&spec)?,
                _ => solve_reaction_evolution(&spec)?,
            };
            let meta = json!({"scheme": r.meta, "warnings": r.warnings});
            (r.times, r.profiles, meta)
        }
    };

    let mut out = Outcome::default();
    let nodes = profiles[0].nodes();
    match format {
        OutFormat::Csv => {
            let mut s = String::from("t,u,rho\n");
            for (t, prof) in times.iter().zip(&profiles) {
                for (u, v) in nodes.iter().zip(&prof.values) {
                    let _ = writeln!(s, "{t},{u},{v}");
                }
            }
            out.outputs.add("trajectory.csv", s.into_bytes());
        }
        OutFormat::Json => {
            let rho: Vec<&Vec<f64>> = profiles.iter().map(|p| &p.values).collect();
            out.outputs.add(
                "trajectory.json",
                json_bytes(&json!({"t": times, "u": nodes, "rho": rho})),
            );
        }
    }
    out.outputs.add(
        "solve.json",
        json_bytes(&json!({
            "equation": equation, "gamma": cfg.gamma, "alpha": cfg.alpha, "beta": cfg.beta,
            "kappa_hat": kh, "N_grid": p.n_grid, "T": p.t_end, "initial": cfg.initial, "result": meta,
        })),
    );
    Ok(out)
}

fn stationary(cfg: &Config, format: OutFormat) -> anyhow::Result<Outcome> {
    let s = &cfg.stationary;
    let kh = s.kappa_hat.context("stationary.kappa_hat unresolved")?;
    let rho = solve_stationary(cfg.gamma, cfg.alpha, cfg.beta, kh, s.n_grid, s.mode)?;
    let nodes = rho.nodes();
    let pot = ContinuumPotentials::new(cfg.gamma, cfg.alpha, cfg.beta)?;
    let sup_inf = nodes
        .iter()
        .zip(&rho.values)
        .map(|(u, v)| (v - pot.rho_bar_inf(*u)).abs())
        .fold(0.0, f64::max);

    let mut report = ExperimentReport::new(
        "stationary",
        json!({"gamma": cfg.gamma, "alpha": cfg.alpha, "beta": cfg.beta, "kappa_hat": kh, "N_grid": s.n_grid, "mode": s.mode}),
    );
    report.info("sup_distance_to_rho_bar_inf", sup_inf);
    report.info(
        "min_value",
        rho.values.iter().cloned().fold(f64::INFINITY, f64::min),
    );
    report.info(
        "max_value",
        rho.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );

    let mut out = Outcome::default();
    match format {
        OutFormat::Csv => {
            let mut buf = String::from("u,rho\n");
            for (u, v) in nodes.iter().zip(&rho.values) {
                let _ = writeln!(buf, "{u},{v}");
            }
            out.outputs.add("stationary.csv", buf.into_bytes());
        }
        OutFormat::Json => out.outputs.add(
            "stationary.json",
            json_bytes(&json!({"u": nodes, "rho": rho.values})),
        ),
    }
    out.outputs.add("report.json", json_bytes(&report));
    Ok(out)
}

fn operator_check(cfg: &Config, format: OutFormat) -> anyhow::Result<Outcome> {
    let o = &cfg.operator;
    if o.gammas.is_empty() || o.bumps.is_empty() {
        bail!("operator.gammas and operator.bumps must be non-empty");
    }
    let report = operator_consistency(&o.gammas, &o.ns, &o.bumps, o.a, o.tol)?;
    let export = if o.export {
        let op = build_operator(o.ns[0], o.gammas[0], OperatorMode::Regional)?;
        Some(match format {
            OutFormat::Csv => {
                let mut buf = Vec::new();
                op.write_csv(&mut buf)?;
                ("operator_matrix.csv", buf)
            }
            OutFormat::Json => {
                let m = op.dim();
                let rows: Vec<Vec<f64>> = (0..m)
                    .map(|i| (0..m).map(|j| op.entry(i, j)).collect())
                    .collect();
                (
                    "operator_matrix.json",
                    json_bytes(&json!({"N": o.ns[0], "gamma": o.gammas[0], "rows": rows})),
                )
            }
        })
    } else {
        None
    };
    let mut out = report_outcome(report, format);
    if let Some((name, bytes)) = export {
        out.outputs.add(name, bytes);
    }
    Ok(out)
}
