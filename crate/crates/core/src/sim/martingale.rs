use serde::{Deserialize, Serialize};

use super::{Configuration, Event, SimResult};
use crate::error::{Error, Result};
use crate::kernel::JumpKernel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MartingalePoint {
    pub t: f64,
    /// `M_t = ⟨π_t,G⟩ - ⟨π_0,G⟩ - ∫_0^t Θ L_N ⟨π_s,G⟩ ds`.
    pub m: f64,
    /// `∫_0^t Γ_s ds`, the predictable quadratic variation.
    pub qv: f64,
}

/// State-dependent pieces of the drift and carré du champ, all linear or
/// quadratic in `η` and updated site by site.
struct Tracker<'a> {
    eta: Vec<bool>,
    g: &'a [f64],
    /// `K_{xy} = p(y-x)(G_x - G_y)^2`, row-major over interior sites.
    k: Vec<f64>,
    m: usize,
    /// Drift weight `w_x = (ℒ_N G)(x) - κN^{-θ} G_x V_N(x)`.
    w: Vec<f64>,
    drift_lin: f64,
    pair_part: f64,
    flip_part: f64,
    /// Flip-rate coefficients: for an empty site `G_x^2(r^-α + r^+β)`, for an
    /// occupied one `G_x^2(r^-(1-α) + r^+(1-β))`.
    flip_empty: Vec<f64>,
    flip_full: Vec<f64>,
}

impl<'a> Tracker<'a> {
    fn set(&mut self, i: usize, value: bool) {
        if self.eta[i] == value {
            return;
        }
        let row = &self.k[i * self.m..(i + 1) * self.m];
        let mut before = 0.0;
        let mut after = 0.0;
        for (j, kij) in row.iter().enumerate() {
            if j == i {
                continue;
            }
            if self.eta[j] != self.eta[i] {
                before += kij;
            }
            if self.eta[j] != value {
                after += kij;
            }
        }
        self.pair_part += after - before;
        let (old_f, new_f) = if value {
            (self.flip_empty[i], self.flip_full[i])
        } else {
            (self.flip_full[i], self.flip_empty[i])
        };
        self.flip_part += new_f - old_f;
        let sign = if value { 1.0 } else { -1.0 };
        self.drift_lin += sign * self.w[i];
        self.eta[i] = value;
    }

    fn pairing(&self) -> f64 {
        self.eta
            .iter()
            .zip(self.g)
            .filter(|(e, _)| **e)
            .map(|(_, g)| g)
            .sum::<f64>()
    }
}

/// Replays a densely recorded trajectory and returns `(t, M_t, QV_t)` at `t = 0`
/// and at every snapshot time.  Drift and quadratic variation are integrated
/// exactly, since both are constant between events.
pub fn track_martingale(
    kernel: &JumpKernel,
    g: &[f64],
    trajectory: &SimResult,
) -> Result<Vec<MartingalePoint>> {
    let params = &trajectory.params;
    let n = params.n;
    let m = n - 1;
    if kernel.n() != n || kernel.gamma() != params.gamma {
        return Err(Error::Consistency(
            "kernel does not match the trajectory parameters".into(),
        ));
    }
    if g.len() != m {
        return Err(Error::Dimension {
            expected: m,
            got: g.len(),
        });
    }
    let events = trajectory.events.as_ref().ok_or_else(|| {
        Error::InsufficientResolution(
            "trajectory was recorded without its event log; rerun with record_events".into(),
        )
    })?;
    if g[0] != 0.0 || g[m - 1] != 0.0 {
        return Err(Error::domain(
            "test function must vanish at the extreme sites",
        ));
    }

    let theta_n = params.time_scale();
    let strength = params.reservoir_strength();
    let norm = 1.0 / m as f64;

    let mut k = vec![0.0; m * m];
    let mut lg = vec![0.0; m];
    for i in 0..m {
        for j in 0..m {
            if i != j {
                let p = kernel.transition_prob(j as i64 - i as i64);
                k[i * m + j] = p * (g[i] - g[j]).powi(2);
                lg[i] += p * (g[j] - g[i]);
            }
        }
    }
    let (rm, rp) = (kernel.tail_left(), kernel.tail_right());
    let (alpha, beta) = (params.alpha, params.beta);
    let w: Vec<f64> = (0..m)
        .map(|i| lg[i] - strength * g[i] * (rm[i] + rp[i]))
        .collect();
    let drift_const: f64 = (0..m)
        .map(|i| strength * g[i] * (rm[i] * alpha + rp[i] * beta))
        .sum();
    let flip_empty: Vec<f64> = (0..m)
        .map(|i| g[i] * g[i] * (rm[i] * alpha + rp[i] * beta))
        .collect();
    let flip_full: Vec<f64> = (0..m)
        .map(|i| g[i] * g[i] * (rm[i] * (1.0 - alpha) + rp[i] * (1.0 - beta)))
        .collect();

    let mut tr = Tracker {
        eta: vec![false; m],
        g,
        k,
        m,
        w,
        drift_lin: 0.0,
        pair_part: 0.0,
        flip_part: flip_empty.iter().sum(),
        flip_empty,
        flip_full,
    };
    let init: &Configuration = &trajectory.initial;
    for x in 1..n {
        tr.set(x - 1, init.get(x));
    }

    let drift = |tr: &Tracker| theta_n * norm * (drift_const + tr.drift_lin);
    let gamma = |tr: &Tracker| theta_n * norm * norm * (tr.pair_part + strength * tr.flip_part);

    let start = tr.pairing() * norm;
    let mut out = vec![MartingalePoint {
        t: 0.0,
        m: 0.0,
        qv: 0.0,
    }];
    let mut t = 0.0;
    let mut int_drift = 0.0;
    let mut int_qv = 0.0;
    let mut ev = events.iter().peekable();
    for snap in &trajectory.snapshots {
        if snap.t == 0.0 {
            continue;
        }
        while let Some(e) = ev.next_if(|e| e.time() <= snap.t) {
            let te = e.time();
            int_drift += drift(&tr) * (te - t);
            int_qv += gamma(&tr) * (te - t);
            t = te;
            match *e {
                Event::Swap { x, y, .. } => {
                    let (a, b) = (x as usize - 1, y as usize - 1);
                    let (ea, eb) = (tr.eta[a], tr.eta[b]);
                    tr.set(a, eb);
                    tr.set(b, ea);
                }
                Event::Flip { x, .. } => {
                    let a = x as usize - 1;
                    let v = !tr.eta[a];
                    tr.set(a, v);
                }
            }
        }
        let d = drift(&tr) * (snap.t - t);
        let q = gamma(&tr) * (snap.t - t);
        let mt = tr.pairing() * norm - start - (int_drift + d);
        out.push(MartingalePoint {
            t: snap.t,
            m: mt,
            qv: int_qv + q,
        });
    }
    Ok(out)
}
