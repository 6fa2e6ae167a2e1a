use crate::error::{Error, Result};
use crate::kernel::normalizing_constant;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

const MAX_INTERVALS: usize = 2000;

/// Globally adaptive Gauss-Kronrod (7/15) integral of `f` over `[a, b]` to
/// absolute `tol`, bisecting the interval with the largest error estimate.
pub fn gauss_kronrod(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(b > a) {
        return Ok(0.0);
    }
    let (v, e) = gk15(f, a, b);
    let mut parts = vec![(a, b, v, e)];
    let mut err = e;
    while err > tol {
        if parts.len() >= MAX_INTERVALS {
            return Err(Error::Accuracy(format!(
                "adaptive quadrature on [{a}, {b}] stalled with error {err:.3e}"
            )));
        }
        let worst = (0..parts.len())
            .max_by(|&i, &j| parts[i].3.total_cmp(&parts[j].3))
            .unwrap_or(0);
        let (lo, hi, _, e) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Err(Error::Accuracy(format!(
                "adaptive quadrature on [{a}, {b}] reached machine resolution with error {err:.3e}"
            )));
        }
        let (v1, e1) = gk15(f, lo, mid);
        let (v2, e2) = gk15(f, mid, hi);
        err += e1 + e2 - e;
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
        if err <= tol {
            // Re-sum to shed accumulated cancellation in the running total.
            err = parts.iter().map(|p| p.3).sum();
        }
    }
    Ok(parts.iter().map(|p| p.2).sum())
}

/// `∫_lo^hi f`, split at `lo + ε·2^k` so that each piece sees a bounded
/// variation of the weight `h^{-(1+γ)}` near the lower end.
fn geometric_integral(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if hi <= lo {
        return Ok(0.0);
    }
    let mut total = 0.0;
    let mut a = lo;
    while a < hi {
        let b = (2.0 * a).min(hi);
        total += gauss_kronrod(f, a, b, tol)?;
        a = b;
    }
    Ok(total)
}

/// Principal-value integral `c_γ PV ∫_0^1 (G(v) - G(u)) / |u - v|^{1+γ} dv`.
///
/// The near-field `|v - u| < ε` is replaced by its Taylor value
/// `G''(u) ε^{2-γ} / (2-γ)` with `G''` from a symmetric second difference, the
/// far field is integrated with both sides folded onto one variable, and the
/// `O(ε^{4-γ})`, `O(ε^{6-γ})`, ... truncation is removed by Richardson extrapolation over
/// `ε_k = 2^{-k}` until successive estimates agree to `tol`.
/// Fails with an accuracy error if they do not agree by `ε = 2^{-13}`.
pub fn quadrature_regional(g: &dyn Fn(f64) -> f64, u: f64, gamma: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::domain(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::domain(format!(
            "evaluation point must lie in (0,1), got {u}"
        )));
    }
    let c = normalizing_constant(gamma)?;
    let s = 1.0 + gamma;
    let gu = g(u);
    let near = u.min(1.0 - u);
    let inner_tol = tol / (64.0 * c);

    // One-sided remainder beyond the symmetric window.
    let one_sided = if u < 0.5 {
        geometric_integral(
            &|h: f64| (g(u + h) - gu) * h.powf(-s),
            near,
            1.0 - u,
            inner_tol,
        )?
    } else {
        geometric_integral(&|h: f64| (g(u - h) - gu) * h.powf(-s), near, u, inner_tol)?
    };

    let folded = |h: f64| (g(u + h) + g(u - h) - 2.0 * gu) * h.powf(-s);
    let estimate = |eps: f64| -> Result<f64> {
        let d2 = (g(u + eps) + g(u - eps) - 2.0 * gu) / (eps * eps);
        let far = geometric_integral(&folded, eps, near, inner_tol)?;
        Ok(far + d2 * eps.powf(2.0 - gamma) / (2.0 - gamma))
    };

    // Truncation error expands in ε^{4-γ}, ε^{6-γ}, ...; eliminate the terms
    // column by column.  Below 2^-13 the second difference is dominated by
    // round-off (~ ε^{-γ}).
    let mut k = (1.0 / near).log2().floor() as i32 + 1;
    let mut row = vec![estimate(2f64.powi(-k))?];
    let mut prev_best = f64::NAN;
    while k < 13 {
        k += 1;
        let mut next = vec![estimate(2f64.powi(-k))?];
        for (j, &coarse) in row.iter().enumerate() {
            let factor = 2f64.powf(4.0 - gamma + 2.0 * j as f64);
            next.push((factor * next[j] - coarse) / (factor - 1.0));
        }
        let best = next[next.len() - 1];
        if (c * (best - prev_best)).abs() < tol {
            return Ok(c * (best + one_sided));
        }
        prev_best = best;
        row = next;
    }
    Err(Error::Accuracy(format!(
        "principal value at u = {u} did not settle to {tol:e}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fracop::{build_operator, OperatorMode};
    use crate::testfn::Bump;

    #[test]
    fn gk_integrates_polynomials_and_smooth_functions() {
        let v = gauss_kronrod(&|x| x.powi(5) - 2.0 * x, 0.0, 2.0, 1e-13).unwrap();
        assert!((v - (64.0 / 6.0 - 4.0)).abs() < 1e-12);
        let v = gauss_kronrod(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn away_from_support_is_a_plain_integral() {
        let b = Bump::new(0.5, 0.1);
        let g = 1.5;
        let c = normalizing_constant(g).unwrap();
        let u = 0.1;
        let plain =
            c * gauss_kronrod(&|v| b.eval(v) * (v - u).powf(-1.0 - g), 0.4, 0.6, 1e-14).unwrap();
        let pv = quadrature_regional(&|v| b.eval(v), u, g, 1e-10).unwrap();
        assert!((pv - plain).abs() < 1e-9, "{pv} vs {plain}");
    }

    #[test]
    fn odd_function_vanishes_at_centre() {
        let pv =
            quadrature_regional(&|v| (v - 0.5).powi(3) + 0.3 * (v - 0.5), 0.5, 1.5, 1e-10).unwrap();
        assert!(pv.abs() < 1e-9);
    }

    #[test]
    fn quadratic_matches_closed_form() {
        // For G(v) = v(1-v) at u, the integrand reduces to
        // (1-2u)(v-u)/|v-u|^{1+γ} - (v-u)^2/|v-u|^{1+γ}.
        let g = 1.3;
        let c = normalizing_constant(g).unwrap();
        let u: f64 = 0.3;
        let a = u;
        let b = 1.0 - u;
        let odd = (1.0 - 2.0 * u) * (b.powf(1.0 - g) - a.powf(1.0 - g)) / (1.0 - g);
        let even = -(a.powf(2.0 - g) + b.powf(2.0 - g)) / (2.0 - g);
        let exact = c * (odd + even);
        let pv = quadrature_regional(&|v| v * (1.0 - v), u, g, 1e-10).unwrap();
        assert!((pv - exact).abs() < 1e-9, "{pv} vs {exact}");
    }

    #[test]
    fn agrees_with_fine_grid_operator() {
        let g = 1.5;
        let n = 4096;
        let a = build_operator(n, g, OperatorMode::Regional).unwrap();
        let f = |v: f64| v * (1.0 - v) * Bump::new(0.3, 0.2).eval(v);
        let gv: Vec<f64> = (1..n).map(|i| f(i as f64 / n as f64)).collect();
        let ag = a.apply(&gv).unwrap();
        let i = (0.3 * n as f64) as usize;
        let pv = quadrature_regional(&f, 0.3, g, 1e-9).unwrap();
        // Leading lattice error of the near-field sum is c G''(u) ζ(γ-1) N^{γ-2}.
        let zeta_half = -1.460_354_508_809_586_8;
        let h = 1e-4;
        let d2 = (f(0.3 + h) + f(0.3 - h) - 2.0 * f(0.3)) / (h * h);
        let lead = a.c_gamma() * d2 * zeta_half * (n as f64).powf(g - 2.0);
        let gap = ag[i - 1] - pv;
        assert!(gap.abs() < 3e-2 * pv.abs(), "{} vs {pv}", ag[i - 1]);
        assert!(
            (gap - lead).abs() < 0.1 * gap.abs(),
            "gap {gap} vs leading term {lead}"
        );
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(matches!(
            quadrature_regional(&|v| v, 0.5, 1.5, 0.0),
            Err(Error::Domain(_))
        ));
    }
}
