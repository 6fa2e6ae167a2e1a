use serde::{Deserialize, Serialize};

use super::grid_potentials;
use super::linear::SpdSolver;
use crate::error::{Error, Result};
use crate::fracop::{build_operator, GridProfile, OperatorMode};
use crate::kernel::{check_gamma, normalizing_constant, ContinuumPotentials};

/// Slack allowed on the `[0,1]` range of computed densities.
pub const RANGE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeSpec {
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub kappa_hat: f64,
    pub n_grid: usize,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub initial: GridProfile,
    /// Keep every `record_every`-th step (the final time is always kept).
    pub record_every: usize,
}

impl PdeSpec {
    /// Spec with initial datum `g` sampled on the grid and every step recorded.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        gamma: f64,
        alpha: f64,
        beta: f64,
        kappa_hat: f64,
        n_grid: usize,
        dt: f64,
        t_end: f64,
        g: impl Fn(f64) -> f64,
    ) -> Self {
        PdeSpec {
            gamma,
            alpha,
            beta,
            kappa_hat,
            n_grid,
            dt,
            t_end,
            initial: GridProfile::from_fn(n_grid, g, alpha, beta),
            record_every: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_gamma(self.gamma)?;
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::domain(format!("{name} must lie in (0,1), got {v}")));
            }
        }
        if !(self.kappa_hat >= 0.0 && self.kappa_hat.is_finite()) {
            return Err(Error::domain(format!(
                "kappa_hat must be >= 0, got {}",
                self.kappa_hat
            )));
        }
        if self.n_grid < 4 {
            return Err(Error::domain(format!(
                "N_grid must be >= 4, got {}",
                self.n_grid
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::domain(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::domain(format!("T must be >= 0, got {}", self.t_end)));
        }
        if self.record_every == 0 {
            return Err(Error::domain("record_every must be >= 1"));
        }
        if self.initial.n != self.n_grid {
            return Err(Error::Dimension {
                expected: self.n_grid - 1,
                got: self.initial.len(),
            });
        }
        if !self.initial.within(0.0, 1.0, 0.0) {
            return Err(Error::domain("initial values must lie in [0,1]"));
        }
        Ok(())
    }

    /// Number of steps and the step actually used, so that steps·dt = T.
    pub fn step_plan(&self) -> (usize, f64) {
        if self.t_end == 0.0 {
            return (0, self.dt);
        }
        let steps = ((self.t_end / self.dt) - 1e-9).ceil().max(1.0) as usize;
        (steps, self.t_end / steps as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeMeta {
    pub scheme: String,
    pub operator: String,
    pub dt: f64,
    pub steps: usize,
    pub factorizations: usize,
    pub solver_iterations: usize,
    pub min_value: f64,
    pub max_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionResult {
    pub spec: PdeSpec,
    pub times: Vec<f64>,
    pub profiles: Vec<GridProfile>,
    pub meta: SchemeMeta,
    pub warnings: Vec<String>,
}

impl EvolutionResult {
    /// Profile at time `t`, linearly interpolated between recorded times.
    pub fn interpolate(&self, t: f64) -> Result<GridProfile> {
        let last = *self.times.last().expect("trajectory has at least one time");
        if t < 0.0 || t > last * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::domain(format!("time {t} outside [0, {last}]")));
        }
        let k = self.times.partition_point(|s| *s < t);
        if k < self.times.len() && (self.times[k] - t).abs() <= 1e-12 * t.max(1.0) {
            return Ok(self.profiles[k].clone());
        }
        if k == 0 {
            return Ok(self.profiles[0].clone());
        }
        if k >= self.times.len() {
            return Ok(self.profiles[self.times.len() - 1].clone());
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        let (a, b) = (&self.profiles[k - 1], &self.profiles[k]);
        let values = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| (1.0 - w) * x + w * y)
            .collect();
        Ok(GridProfile {
            values,
            ..a.clone()
        })
    }

    pub fn final_profile(&self) -> &GridProfile {
        self.profiles
            .last()
            .expect("trajectory has at least one profile")
    }
}

/// Implicit Euler for `∂_t ρ = s_A·Aρ - s_V·V_1 ρ + s_V·V_0 (+ s_A·b)`.
fn evolve(spec: &PdeSpec, diffusion: f64, reaction: f64, scheme: &str) -> Result<EvolutionResult> {
    spec.validate()?;
    let n = spec.n_grid;
    let (steps, dt) = spec.step_plan();

    let pinned = reaction == 0.0;
    let (v0, v1) = if pinned {
        (vec![0.0; n - 1], vec![0.0; n - 1])
    } else {
        grid_potentials(spec.gamma, spec.alpha, spec.beta, n)?
    };
    let mode = if pinned {
        OperatorMode::PinnedBoundary {
            alpha: spec.alpha,
            beta: spec.beta,
        }
    } else {
        OperatorMode::Regional
    };
    let op = if diffusion > 0.0 {
        Some(build_operator(n, spec.gamma, mode)?)
    } else {
        None
    };
    if pinned && op.is_none() {
        return Err(Error::domain(
            "equation without diffusion needs kappa_hat > 0",
        ));
    }

    let mut forcing: Vec<f64> = v0.iter().map(|v| reaction * v).collect();
    if let Some(b) = op.as_ref().and_then(|o| o.boundary_vector()) {
        forcing
            .iter_mut()
            .zip(b)
            .for_each(|(f, b)| *f += diffusion * b);
    }
    let diag: Vec<f64> = v1.iter().map(|v| 1.0 + dt * reaction * v).collect();
    let mut solver = SpdSolver::new(op.as_ref(), diag, dt * diffusion)?;

    let mut rho = spec.initial.values.clone();
    let mut times = vec![0.0];
    let mut profiles = vec![GridProfile {
        values: rho.clone(),
        left_bc: spec.alpha,
        right_bc: spec.beta,
        n,
    }];
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut rhs = vec![0.0; n - 1];
    for step in 1..=steps {
        for i in 0..n - 1 {
            rhs[i] = rho[i] + dt * forcing[i];
        }
        rho = solver.solve(&rhs)?;
        if rho.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite density at step {step}"
            )));
        }
        for v in &rho {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
        if step % spec.record_every == 0 || step == steps {
            times.push(step as f64 * dt);
            profiles.push(GridProfile {
                values: rho.clone(),
                left_bc: spec.alpha,
                right_bc: spec.beta,
                n,
            });
        }
    }

    let mut warnings = Vec::new();
    if steps > 0 && (lo < -RANGE_TOL || hi > 1.0 + RANGE_TOL) {
        warnings.push(format!(
            "monotonicity check failed: values reached [{lo:.3e}, {hi:.3e}] with dt = {dt:e}"
        ));
    }
    let meta = SchemeMeta {
        scheme: scheme.to_string(),
        operator: match (&op, mode) {
            (None, _) => "none".into(),
            (Some(_), OperatorMode::Regional) => "regional".into(),
            (Some(_), OperatorMode::PinnedBoundary { .. }) => "pinned-boundary".into(),
        },
        dt,
        steps,
        factorizations: usize::from(op.as_ref().is_some_and(|o| o.is_dense())),
        solver_iterations: solver.iterations(),
        min_value: lo,
        max_value: hi,
    };
    Ok(EvolutionResult {
        spec: spec.clone(),
        times,
        profiles,
        meta,
        warnings,
    })
}

/// `∂_t ρ = 𝕃ρ - κ̂V_1ρ + κ̂V_0`; ghost-node boundary when `κ̂ = 0`.
pub fn solve_evolution(spec: &PdeSpec) -> Result<EvolutionResult> {
    evolve(spec, 1.0, spec.kappa_hat, "implicit-euler")
}

/// The time-rescaled profile `ρ̂_t = ρ^κ_{t/κ}` with `κ = kappa_hat > 0`, i.e.
/// `∂_t ρ̂ = κ^{-1}𝕃ρ̂ - V_1ρ̂ + V_0`.
pub fn solve_evolution_rescaled(spec: &PdeSpec) -> Result<EvolutionResult> {
    if !(spec.kappa_hat > 0.0) {
        return Err(Error::domain("rescaled evolution needs kappa_hat > 0"));
    }
    evolve(spec, 1.0 / spec.kappa_hat, 1.0, "implicit-euler-rescaled")
}

/// Implicit Euler for the reaction equation `∂_t ρ = κ̂(V_0 - V_1ρ)`.
pub fn solve_reaction_evolution(spec: &PdeSpec) -> Result<EvolutionResult> {
    if !(spec.kappa_hat > 0.0) {
        return Err(Error::domain("reaction equation needs kappa_hat > 0"));
    }
    evolve(spec, 0.0, spec.kappa_hat, "implicit-euler-reaction")
}

/// Closed-form solution `ρ̄^∞ + (g - ρ̄^∞) e^{-tκ̂V_1}` of the reaction equation.
pub fn reaction_solution(
    g: &GridProfile,
    t: f64,
    kappa_hat: f64,
    gamma: f64,
    alpha: f64,
    beta: f64,
) -> Result<GridProfile> {
    if !(kappa_hat > 0.0) {
        return Err(Error::domain(format!(
            "kappa_hat must be positive, got {kappa_hat}"
        )));
    }
    if !(t >= 0.0) {
        return Err(Error::domain(format!("t must be >= 0, got {t}")));
    }
    let c = normalizing_constant(gamma)?;
    let pot = ContinuumPotentials::with_constant(gamma, alpha, beta, c);
    let values = g
        .values
        .iter()
        .enumerate()
        .map(|(i, gv)| {
            let u = g.node(i);
            let bar = pot.rho_bar_inf(u);
            bar + (gv - bar) * (-t * kappa_hat * pot.v1(u)).exp()
        })
        .collect();
    Ok(GridProfile {
        n: g.n,
        values,
        left_bc: alpha,
        right_bc: beta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::{solve_stationary, StationaryMode};
    use proptest::prelude::*;

    #[test]
    fn constant_state_is_stationary() {
        for kh in [0.0, 1.0, 50.0] {
            let spec = PdeSpec::new(1.5, 0.4, 0.4, kh, 64, 1e-3, 0.05, |_| 0.4);
            let r = solve_evolution(&spec).unwrap();
            for p in &r.profiles {
                assert!(p.values.iter().all(|v| (v - 0.4).abs() < 1e-12), "kh={kh}");
            }
        }
    }

    #[test]
    fn stationary_input_does_not_drift() {
        for kh in [0.0, 1.0] {
            let bar = solve_stationary(1.5, 0.2, 0.8, kh, 128, StationaryMode::Auto).unwrap();
            let mut spec = PdeSpec::new(1.5, 0.2, 0.8, kh, 128, 1e-2, 0.5, |_| 0.0);
            spec.initial = bar.clone();
            let r = solve_evolution(&spec).unwrap();
            let drift = r
                .profiles
                .iter()
                .map(|p| p.sup_distance(&bar).unwrap())
                .fold(0.0, f64::max);
            assert!(drift <= 1e-6, "kh={kh}: drift {drift}");
        }
    }

    #[test]
    fn reaction_closed_form_limits() {
        let g = GridProfile::from_fn(64, |u| u * u, 0.2, 0.8);
        let same = reaction_solution(&g, 0.0, 2.0, 1.5, 0.2, 0.8).unwrap();
        assert_eq!(same.values, g.values);

        let pot = ContinuumPotentials::new(1.5, 0.2, 0.8).unwrap();
        let t = 1e3 / (2.0 * pot.v1(0.5));
        let late = reaction_solution(&g, t, 2.0, 1.5, 0.2, 0.8).unwrap();
        let bar = GridProfile::from_fn(64, |u| pot.rho_bar_inf(u), 0.2, 0.8);
        assert!(late.sup_distance(&bar).unwrap() <= 1e-6);

        let flat = GridProfile::constant(64, 0.3);
        let r = reaction_solution(&flat, 0.7, 1.0, 1.5, 0.3, 0.3).unwrap();
        assert!(r.values.iter().all(|v| (v - 0.3).abs() < 1e-15));
    }

    #[test]
    fn implicit_reaction_tracks_closed_form() {
        let mut errs = Vec::new();
        for dt in [1e-2, 5e-3] {
            let spec = PdeSpec::new(1.5, 0.2, 0.8, 1.0, 64, dt, 0.2, |_| 0.5);
            let r = solve_reaction_evolution(&spec).unwrap();
            let exact = reaction_solution(&spec.initial, 0.2, 1.0, 1.5, 0.2, 0.8).unwrap();
            errs.push(r.final_profile().sup_distance(&exact).unwrap());
        }
        assert!(errs[1] < errs[0] && errs[0] < 0.05, "{errs:?}");
    }

    #[test]
    fn rescaled_equals_original_at_rescaled_times() {
        let k = 5.0;
        let spec = PdeSpec::new(1.5, 0.2, 0.8, k, 64, 1e-3, 0.05, |u| u);
        let a = solve_evolution_rescaled(&spec).unwrap();
        let orig = PdeSpec {
            dt: 1e-3 / k,
            t_end: 0.05 / k,
            ..spec.clone()
        };
        let b = solve_evolution(&orig).unwrap();
        assert!(a.final_profile().sup_distance(b.final_profile()).unwrap() < 1e-12);
    }

    #[test]
    fn interpolation_and_recording() {
        let mut spec = PdeSpec::new(1.5, 0.2, 0.8, 1.0, 32, 0.01, 0.1, |_| 0.5);
        spec.record_every = 3;
        let r = solve_evolution(&spec).unwrap();
        assert_eq!(r.meta.steps, 10);
        assert_eq!(r.times.len(), 1 + 3 + 1);
        assert!(r.times.windows(2).all(|w| w[1] > w[0]));
        let mid = r.interpolate(0.045).unwrap();
        let (p, q) = (&r.profiles[1], &r.profiles[2]);
        assert!((mid.values[5] - 0.5 * (p.values[5] + q.values[5])).abs() < 1e-12);
        assert!(r.interpolate(0.2).is_err());
    }

    #[test]
    fn rejects_invalid_specs() {
        let bad = PdeSpec::new(1.5, 0.2, 0.8, -1.0, 32, 0.01, 0.1, |_| 0.5);
        assert!(matches!(solve_evolution(&bad), Err(Error::Domain(_))));
        let bad = PdeSpec::new(1.5, 0.2, 0.8, 1.0, 32, 0.0, 0.1, |_| 0.5);
        assert!(solve_evolution(&bad).is_err());
        let bad = PdeSpec::new(1.5, 0.2, 0.8, 1.0, 32, 0.01, 0.1, |_| 1.5);
        assert!(solve_evolution(&bad).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn maximum_principle_and_order(kh in prop_oneof![Just(0.0), 0.01f64..20.0],
                                       a in 0.01f64..0.99, b in 0.01f64..0.99,
                                       f in 0.0f64..10.0, lift in 0.0f64..0.3) {
            let lo = move |u: f64| 0.5 + 0.2 * (f * u).sin() - lift;
            let spec = PdeSpec::new(1.5, a, b, kh, 64, 5e-3, 0.05, lo);
            let low = solve_evolution(&spec).unwrap();
            let hi_spec = PdeSpec::new(1.5, a, b, kh, 64, 5e-3, 0.05, move |u| lo(u) + lift);
            let high = solve_evolution(&hi_spec).unwrap();
            for (p, q) in low.profiles.iter().zip(&high.profiles) {
                prop_assert!(p.within(0.0, 1.0, RANGE_TOL));
                prop_assert!(q.within(0.0, 1.0, RANGE_TOL));
                for (x, y) in p.values.iter().zip(&q.values) {
                    prop_assert!(y >= &(x - 1e-12));
                }
            }
            prop_assert!(low.warnings.is_empty());
        }
    }
}
