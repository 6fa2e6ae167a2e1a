use serde::{Deserialize, Serialize};

use super::{grid_potentials, EvolutionResult};
use crate::error::{Error, Result};
use crate::fracop::{build_operator, GridProfile, OperatorMode};
use crate::testfn::Bump;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualKind {
    Dirichlet,
    Reaction,
    Stationary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquationParams {
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub kappa_hat: f64,
}

/// `G(s, u) = bump(u) · Σ_k coeffs[k] s^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub bump: Bump,
    pub time_poly: Vec<f64>,
}

impl TestFunction {
    pub fn stationary(bump: Bump) -> Self {
        TestFunction {
            bump,
            time_poly: vec![1.0],
        }
    }

    fn time_factor(&self, s: f64) -> (f64, f64) {
        let mut val = 0.0;
        let mut der = 0.0;
        for c in self.time_poly.iter().rev() {
            der = der * s + val;
            val = val * s + c;
        }
        (val, der)
    }

    /// The standard battery: every default bump, each with three time modulations.
    pub fn battery() -> Vec<TestFunction> {
        let polys = [vec![1.0], vec![1.0, 1.0], vec![1.0, 0.0, -0.5]];
        crate::testfn::bump_battery()
            .into_iter()
            .flat_map(|b| {
                polys.iter().map(move |p| TestFunction {
                    bump: b,
                    time_poly: p.clone(),
                })
            })
            .collect()
    }
}

pub enum ResidualInput<'a> {
    Trajectory(&'a EvolutionResult),
    Profile(&'a GridProfile),
}

fn dot(a: &[f64], b: &[f64], h: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * h
}

/// Maximum absolute weak-form residual over the supplied test functions and, for
/// trajectories, over every recorded time.  Space integrals use the grid sum
/// (the trapezoid rule for functions vanishing at the ends), the operator is the
/// regional matrix, time integrals use the trapezoid rule on the recorded times.
pub fn weak_residual(
    kind: ResidualKind,
    eq: &EquationParams,
    solution: ResidualInput<'_>,
    tests: &[TestFunction],
    g: Option<&GridProfile>,
) -> Result<f64> {
    let n = match &solution {
        ResidualInput::Trajectory(r) => r.spec.n_grid,
        ResidualInput::Profile(p) => p.n,
    };
    let h = 1.0 / n as f64;
    for tf in tests {
        let (lo, hi) = tf.bump.support();
        if !(lo >= h && hi <= 1.0 - h) {
            return Err(Error::domain(format!(
                "test function supported on [{lo}, {hi}] does not vanish near the endpoints"
            )));
        }
    }
    let op = build_operator(n, eq.gamma, OperatorMode::Regional)?;
    let (v0, v1) = grid_potentials(eq.gamma, eq.alpha, eq.beta, n)?;
    let kh = eq.kappa_hat;
    let diffusion = match kind {
        ResidualKind::Reaction => 0.0,
        _ => 1.0,
    };

    // For each test function: its grid values, the spatial part of the
    // generator acting on it, and its pairing with V_0.
    struct Prepared {
        values: Vec<f64>,
        gen: Vec<f64>,
        source: f64,
    }
    let prepared: Vec<Prepared> = tests
        .iter()
        .map(|tf| {
            let values = tf.bump.on_grid(n);
            let ag = op.apply(&values)?;
            let gen = ag
                .iter()
                .zip(&values)
                .zip(&v1)
                .map(|((a, gv), w)| diffusion * a - kh * w * gv)
                .collect();
            let source = kh * dot(&values, &v0, h);
            Ok(Prepared {
                values,
                gen,
                source,
            })
        })
        .collect::<Result<_>>()?;

    match solution {
        ResidualInput::Profile(p) => {
            if kind != ResidualKind::Stationary {
                return Err(Error::Consistency(
                    "a single profile only admits the stationary residual".into(),
                ));
            }
            if p.len() != n - 1 {
                return Err(Error::Dimension {
                    expected: n - 1,
                    got: p.len(),
                });
            }
            Ok(prepared
                .iter()
                .map(|pr| (dot(&p.values, &pr.gen, h) + pr.source).abs())
                .fold(0.0, f64::max))
        }
        ResidualInput::Trajectory(traj) => {
            if kind == ResidualKind::Stationary {
                return Err(Error::Consistency(
                    "stationary residual needs a single profile".into(),
                ));
            }
            let g = g.unwrap_or(&traj.profiles[0]);
            g.check_same_grid(&traj.profiles[0])?;
            let mut worst = 0.0f64;
            for (tf, pr) in tests.iter().zip(&prepared) {
                // Integrand ⟨ρ_s, (∂_s + generator) G_s⟩ + source(s).
                let integrand = |k: usize| {
                    let (m, dm) = tf.time_factor(traj.times[k]);
                    let rho = &traj.profiles[k].values;
                    dm * dot(rho, &pr.values, h) + m * dot(rho, &pr.gen, h) + m * pr.source
                };
                let (m0, _) = tf.time_factor(0.0);
                let start = m0 * dot(&g.values, &pr.values, h);
                let mut acc = 0.0;
                let mut prev = integrand(0);
                for k in 1..traj.times.len() {
                    let cur = integrand(k);
                    acc += 0.5 * (traj.times[k] - traj.times[k - 1]) * (prev + cur);
                    prev = cur;
                    let (m, _) = tf.time_factor(traj.times[k]);
                    let now = m * dot(&traj.profiles[k].values, &pr.values, h);
                    worst = worst.max((now - start - acc).abs());
                }
            }
            Ok(worst)
        }
    }
}
