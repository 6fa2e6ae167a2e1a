use serde::Serialize;

use crate::error::Result;
use crate::fracop::GridProfile;
use crate::kernel::{check_gamma, normalizing_constant, ContinuumPotentials};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Norms {
    pub l2: f64,
    pub seminorm_gamma_half: f64,
    pub v1_weighted: f64,
    /// `(1/N) Σ (α - ρ_i)^2 / u_i^γ`, not square-rooted.
    pub hardy_left: f64,
    /// `(1/N) Σ (β - ρ_i)^2 / (1 - u_i)^γ`, not square-rooted.
    pub hardy_right: f64,
}

/// Discrete `‖v‖²_{γ/2} = (c_γ/2) N^{-2} Σ_{i≠j} (v_i - v_j)^2 / |u_i - u_j|^{1+γ}`
/// over interior nodes of a grid with spacing `1/N`.
pub fn seminorm_sq(values: &[f64], n: usize, gamma: f64, c_gamma: f64) -> f64 {
    let m = values.len();
    let s = 1.0 + gamma;
    let mut total = 0.0;
    for d in 1..m {
        let w = (d as f64).powf(-s);
        let inner: f64 = values[..m - d]
            .iter()
            .zip(&values[d..])
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        total += w * inner;
    }
    // Each unordered pair appears twice in Σ_{i≠j}.
    c_gamma * (n as f64).powf(gamma - 1.0) * total
}

/// `(1/N) Σ v_i^2 V_1(u_i)`.
pub fn v1_weighted_sq(values: &[f64], n: usize, pot: &ContinuumPotentials) -> f64 {
    let h = 1.0 / n as f64;
    values
        .iter()
        .enumerate()
        .map(|(k, v)| v * v * pot.v1((k + 1) as f64 * h))
        .sum::<f64>()
        * h
}

pub fn norms(profile: &GridProfile, gamma: f64, alpha: f64, beta: f64) -> Result<Norms> {
    check_gamma(gamma)?;
    let c = normalizing_constant(gamma)?;
    let pot = ContinuumPotentials::with_constant(gamma, alpha, beta, c);
    let n = profile.n;
    let h = 1.0 / n as f64;
    let v = &profile.values;

    let interior: f64 = v.iter().map(|x| x * x).sum();
    let ends = 0.5 * (profile.left_bc.powi(2) + profile.right_bc.powi(2));
    let l2 = (h * (interior + ends)).sqrt();

    let mut hardy_left = 0.0;
    let mut hardy_right = 0.0;
    for (k, x) in v.iter().enumerate() {
        let u = (k + 1) as f64 * h;
        hardy_left += (alpha - x).powi(2) * u.powf(-gamma);
        hardy_right += (beta - x).powi(2) * (1.0 - u).powf(-gamma);
    }

    Ok(Norms {
        l2,
        seminorm_gamma_half: seminorm_sq(v, n, gamma, c).sqrt(),
        v1_weighted: v1_weighted_sq(v, n, &pot).sqrt(),
        hardy_left: hardy_left * h,
        hardy_right: hardy_right * h,
    })
}
