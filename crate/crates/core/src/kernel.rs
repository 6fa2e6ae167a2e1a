//! Heavy-tailed jump law `p(z) = c_γ |z|^{-(1+γ)}`, its reservoir tail sums and
//! the continuum boundary potentials that appear in the limit equations.

use rand::Rng;
use rand_distr::{weighted::WeightedAliasIndex, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probabilities are tabulated explicitly up to at least this displacement.
pub const MIN_TABLE_RANGE: usize = 100_000;

/// Microscopic and macroscopic parameters of the boundary-driven system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    pub theta: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

impl ModelParams {
    pub fn new(
        gamma: f64,
        alpha: f64,
        beta: f64,
        kappa: f64,
        theta: f64,
        n: usize,
    ) -> Result<Self> {
        let params = ModelParams {
            gamma,
            alpha,
            beta,
            kappa,
            theta,
            n,
        };
        params.validate()?;
        Ok(params)
    }

    /// Checks every invariant, including `theta <= 0`.
    pub fn validate(&self) -> Result<()> {
        self.validate_ranges()?;
        if !(self.theta <= 0.0) {
            return Err(Error::domain(format!(
                "theta must be <= 0, got {}",
                self.theta
            )));
        }
        Ok(())
    }

    /// Same as [`validate`](Self::validate) but admits `theta > 0`, which only
    /// exploratory runs use.
    pub fn validate_ranges(&self) -> Result<()> {
        check_gamma(self.gamma)?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::domain(format!(
                "alpha must lie in (0,1), got {}",
                self.alpha
            )));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::domain(format!(
                "beta must lie in (0,1), got {}",
                self.beta
            )));
        }
        if self.alpha > self.beta {
            return Err(Error::domain(format!(
                "alpha <= beta required, got alpha = {} > beta = {}",
                self.alpha, self.beta
            )));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::domain(format!(
                "kappa must be positive, got {}",
                self.kappa
            )));
        }
        if !self.theta.is_finite() {
            return Err(Error::domain("theta must be finite"));
        }
        if self.n < 2 {
            return Err(Error::domain(format!("N must be >= 2, got {}", self.n)));
        }
        Ok(())
    }

    /// `Θ(N) = N^{γ+θ}`: microscopic time elapsed per unit of macroscopic time.
    pub fn time_scale(&self) -> f64 {
        (self.n as f64).powf(self.gamma + self.theta)
    }

    /// Reservoir prefactor `κ N^{-θ}`.
    pub fn reservoir_strength(&self) -> f64 {
        self.kappa * (self.n as f64).powf(-self.theta)
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 1.0 && gamma < 2.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "gamma must lie in (1,2), got {gamma}"
        )))
    }
}

/// `Σ_{z > z0} z^{-s}` by Euler-Maclaurin, accurate to far below f64 resolution
/// once `z0` is in the thousands.
fn zeta_tail(s: f64, z0: f64) -> f64 {
    let f = z0.powf(-s);
    z0 * f / (s - 1.0) - 0.5 * f + s * f / (12.0 * z0)
        - s * (s + 1.0) * (s + 2.0) * f / (720.0 * z0.powi(3))
}

/// Compensated (Neumaier) accumulator.
#[derive(Default, Clone, Copy)]
struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Backward tail sums `Σ_{y >= z} y^{-s}` for `z = 1..=keep`, accumulated from the
/// analytic tail beyond `range`.  Returns the tail array (index `z`, entry 0
/// unused), the tabulated mass `Σ_{z <= range}` and the analytic remainder.
fn backward_tails(s: f64, range: usize, keep: usize) -> (Vec<f64>, f64, f64) {
    let remainder = zeta_tail(s, range as f64);
    let mut acc = KahanSum::default();
    let mut tails = vec![0.0; keep + 1];
    for z in (1..=range).rev() {
        acc.add((z as f64).powf(-s));
        if z <= keep {
            tails[z] = acc.value() + remainder;
        }
    }
    (tails, acc.value(), remainder)
}

/// `c_γ = 1 / (2 ζ(1+γ))`, the constant normalising `p` to a probability.
pub fn normalizing_constant(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let (_, table, rem) = backward_tails(1.0 + gamma, MIN_TABLE_RANGE, 0);
    Ok(0.5 / (table + rem))
}

/// Normalised long-jump transition law on a lattice of size `N`, with the exact
/// reservoir tail sums `r_N^±` and a sampler for bulk displacements.
#[derive(Debug, Clone)]
pub struct JumpKernel {
    gamma: f64,
    n: usize,
    c_gamma: f64,
    max_range: usize,
    /// `p(z)` for `z = 0..=n`.
    prob: Vec<f64>,
    /// `Σ_{y >= z} p(y)` for `z = 0..=n` (entry 0 unused).
    tail: Vec<f64>,
    tabulated_mass: f64,
    tail_mass: f64,
    displacement: Option<WeightedAliasIndex<f64>>,
    displacement_mass: f64,
}

/// Builds the kernel for exponent `gamma` on `Λ_N = {1, …, N−1}`.
pub fn build_kernel(gamma: f64, n: usize) -> Result<JumpKernel> {
    check_gamma(gamma)?;
    if n < 2 {
        return Err(Error::domain(format!("N must be >= 2, got {n}")));
    }
    let s = 1.0 + gamma;
    let max_range = (10 * n).max(MIN_TABLE_RANGE);
    let (raw_tail, table, rem) = backward_tails(s, max_range, n);
    let c_gamma = 0.5 / (table + rem);

    let mut prob = vec![0.0; n + 1];
    for (z, p) in prob.iter_mut().enumerate().skip(1) {
        *p = c_gamma * (z as f64).powf(-s);
    }
    let tail: Vec<f64> = raw_tail.iter().map(|t| c_gamma * t).collect();

    // Bulk displacements never exceed N-2 inside Λ_N.
    let (displacement, displacement_mass) = if n >= 3 {
        let weights = prob[1..=n - 2].to_vec();
        let mass = weights.iter().sum::<f64>();
        let alias = WeightedAliasIndex::new(weights)
            .map_err(|e| Error::Numerical(format!("alias table: {e}")))?;
        (Some(alias), mass)
    } else {
        (None, 0.0)
    };

    Ok(JumpKernel {
        gamma,
        n,
        c_gamma,
        max_range,
        prob,
        tail,
        tabulated_mass: c_gamma * table,
        tail_mass: c_gamma * rem,
        displacement,
        displacement_mass,
    })
}

impl JumpKernel {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn c_gamma(&self) -> f64 {
        self.c_gamma
    }

    pub fn max_range(&self) -> usize {
        self.max_range
    }

    /// `p(z)`; zero at the origin and symmetric in `z`.
    pub fn transition_prob(&self, z: i64) -> f64 {
        if z == 0 {
            return 0.0;
        }
        let a = z.unsigned_abs() as usize;
        match self.prob.get(a) {
            Some(p) => *p,
            None => self.c_gamma * (a as f64).powf(-1.0 - self.gamma),
        }
    }

    /// Total mass `Σ_{z≠0} p(z)`: twice the tabulated half plus the analytic tail.
    pub fn total_mass(&self) -> f64 {
        2.0 * (self.tabulated_mass + self.tail_mass)
    }

    /// `Σ_{y >= z} p(y)` for `1 <= z <= N`.
    pub fn tail_from(&self, z: usize) -> f64 {
        self.tail[z]
    }

    /// `(r_N^-(x/N), r_N^+(x/N))` for a site `x ∈ Λ_N`.
    pub fn reservoir_rates(&self, x: i64) -> Result<(f64, f64)> {
        let hi = self.n as i64 - 1;
        if x < 1 || x > hi {
            return Err(Error::Index {
                index: x,
                lo: 1,
                hi,
            });
        }
        let x = x as usize;
        Ok((self.tail[x], self.tail[self.n - x]))
    }

    /// `r_N^-(x/N)` for `x = 1..N-1`.
    pub fn tail_left(&self) -> Vec<f64> {
        (1..self.n).map(|x| self.tail[x]).collect()
    }

    /// `r_N^+(x/N)` for `x = 1..N-1`.
    pub fn tail_right(&self) -> Vec<f64> {
        (1..self.n).map(|x| self.tail[self.n - x]).collect()
    }

    /// Mass `Σ_{1 <= |z| <= N-2} p(z)` covered by the displacement sampler.
    pub fn displacement_mass(&self) -> f64 {
        2.0 * self.displacement_mass
    }

    /// Draws a signed displacement `z` with `1 <= |z| <= N-2` and probability
    /// proportional to `p(z)`.  Returns `None` when `N < 3`.
    pub fn sample_displacement<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<i64> {
        let alias = self.displacement.as_ref()?;
        let d = alias.sample(rng) as i64 + 1;
        Some(if rng.random::<bool>() { d } else { -d })
    }
}

/// Continuum boundary potentials at a point `u ∈ (0,1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Potentials {
    pub r_minus: f64,
    pub r_plus: f64,
    pub v0: f64,
    pub v1: f64,
    pub rho_bar_inf: f64,
}

/// Evaluator for `r^±`, `V_0`, `V_1` and `ρ̄^∞ = V_0 / V_1` that computes `c_γ` once.
#[derive(Debug, Clone, Copy)]
pub struct ContinuumPotentials {
    gamma: f64,
    alpha: f64,
    beta: f64,
    c_over_gamma: f64,
}

impl ContinuumPotentials {
    pub fn new(gamma: f64, alpha: f64, beta: f64) -> Result<Self> {
        let c = normalizing_constant(gamma)?;
        Ok(Self::with_constant(gamma, alpha, beta, c))
    }

    pub(crate) fn with_constant(gamma: f64, alpha: f64, beta: f64, c_gamma: f64) -> Self {
        ContinuumPotentials {
            gamma,
            alpha,
            beta,
            c_over_gamma: c_gamma / gamma,
        }
    }

    pub fn at(&self, u: f64) -> Result<Potentials> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Singularity(u));
        }
        let r_minus = self.c_over_gamma * u.powf(-self.gamma);
        let r_plus = self.c_over_gamma * (1.0 - u).powf(-self.gamma);
        let v1 = r_minus + r_plus;
        let v0 = self.alpha * r_minus + self.beta * r_plus;
        Ok(Potentials {
            r_minus,
            r_plus,
            v0,
            v1,
            rho_bar_inf: v0 / v1,
        })
    }

    pub fn v1(&self, u: f64) -> f64 {
        self.c_over_gamma * (u.powf(-self.gamma) + (1.0 - u).powf(-self.gamma))
    }

    pub fn v0(&self, u: f64) -> f64 {
        self.c_over_gamma
            * (self.alpha * u.powf(-self.gamma) + self.beta * (1.0 - u).powf(-self.gamma))
    }

    /// `ρ̄^∞` in the overflow-free form `(β u^γ + α (1-u)^γ) / (u^γ + (1-u)^γ)`,
    /// valid on the closed interval.
    pub fn rho_bar_inf(&self, u: f64) -> f64 {
        let a = u.powf(self.gamma);
        let b = (1.0 - u).powf(self.gamma);
        (self.beta * a + self.alpha * b) / (a + b)
    }
}

/// One-shot evaluation of the continuum potentials.
pub fn continuum_potentials(gamma: f64, alpha: f64, beta: f64, u: f64) -> Result<Potentials> {
    ContinuumPotentials::new(gamma, alpha, beta)?.at(u)
}
