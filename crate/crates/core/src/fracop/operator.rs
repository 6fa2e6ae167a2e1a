use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{build_kernel, JumpKernel};

/// Largest `N` stored as a dense matrix; larger grids apply the operator on the fly.
pub const DENSE_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum OperatorMode {
    /// Jumps only between interior nodes; rows sum to zero.
    Regional,
    /// Two ghost nodes at `0` and `1` carrying `alpha` and `beta`.
    PinnedBoundary { alpha: f64, beta: f64 },
}

#[derive(Debug, Clone)]
enum Storage {
    Dense(DMatrix<f64>),
    MatrixFree,
}

/// `N^γ ℒ_N` restricted to the interior nodes `1..N-1`.
///
/// The matrix is Toeplitz off the diagonal, so it is described by the weights
/// `w_d = N^γ p(d)` plus a diagonal; a dense copy is kept for `N <= DENSE_LIMIT`.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    n: usize,
    gamma: f64,
    mode: OperatorMode,
    c_gamma: f64,
    weights: Vec<f64>,
    diag: Vec<f64>,
    boundary: Option<Vec<f64>>,
    storage: Storage,
}

pub fn build_operator(n: usize, gamma: f64, mode: OperatorMode) -> Result<OperatorMatrix> {
    if n < 4 {
        return Err(Error::domain(format!(
            "operator grid needs N >= 4, got {n}"
        )));
    }
    let kernel = build_kernel(gamma, n)?;
    OperatorMatrix::from_kernel(&kernel, mode)
}

impl OperatorMatrix {
    pub fn from_kernel(kernel: &JumpKernel, mode: OperatorMode) -> Result<Self> {
        let n = kernel.n();
        if n < 4 {
            return Err(Error::domain(format!(
                "operator grid needs N >= 4, got {n}"
            )));
        }
        if let OperatorMode::PinnedBoundary { alpha, beta } = mode {
            if !alpha.is_finite() || !beta.is_finite() {
                return Err(Error::domain("boundary values must be finite"));
            }
        }
        let scale = (n as f64).powf(kernel.gamma());
        let m = n - 1;
        let weights: Vec<f64> = (0..m)
            .map(|d| scale * kernel.transition_prob(d as i64))
            .collect();

        let mut prefix = vec![0.0; m];
        for d in 1..m {
            prefix[d] = prefix[d - 1] + weights[d];
        }
        let mut diag: Vec<f64> = (1..n).map(|i| -(prefix[i - 1] + prefix[m - i])).collect();
        let boundary = match mode {
            OperatorMode::Regional => None,
            OperatorMode::PinnedBoundary { alpha, beta } => {
                let mut b = Vec::with_capacity(m);
                for (k, d) in diag.iter_mut().enumerate() {
                    let i = k + 1;
                    let pl = scale * kernel.transition_prob(i as i64);
                    let pr = scale * kernel.transition_prob((n - i) as i64);
                    *d -= pl + pr;
                    b.push(alpha * pl + beta * pr);
                }
                Some(b)
            }
        };

        let storage = if n <= DENSE_LIMIT {
            let mut a = DMatrix::from_fn(m, m, |i, j| weights[i.abs_diff(j)]);
            a.set_diagonal(&DVector::from_column_slice(&diag));
            Storage::Dense(a)
        } else {
            Storage::MatrixFree
        };

        Ok(OperatorMatrix {
            n,
            gamma: kernel.gamma(),
            mode,
            c_gamma: kernel.c_gamma(),
            weights,
            diag,
            boundary,
            storage,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn mode(&self) -> OperatorMode {
        self.mode
    }

    pub fn c_gamma(&self) -> f64 {
        self.c_gamma
    }

    /// Number of interior unknowns, `N - 1`.
    pub fn dim(&self) -> usize {
        self.n - 1
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else {
            self.weights[i.abs_diff(j)]
        }
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Affine boundary contribution `b`, present only in pinned-boundary mode.
    pub fn boundary_vector(&self) -> Option<&[f64]> {
        self.boundary.as_deref()
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    pub fn dense(&self) -> Option<&DMatrix<f64>> {
        match &self.storage {
            Storage::Dense(a) => Some(a),
            Storage::MatrixFree => None,
        }
    }

    /// Dense copy regardless of the storage mode.
    pub fn to_dense(&self) -> DMatrix<f64> {
        match &self.storage {
            Storage::Dense(a) => a.clone(),
            Storage::MatrixFree => {
                let m = self.dim();
                DMatrix::from_fn(m, m, |i, j| self.entry(i, j))
            }
        }
    }

    /// `A v` (the boundary vector is not added).
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let m = self.dim();
        if v.len() != m {
            return Err(Error::Dimension {
                expected: m,
                got: v.len(),
            });
        }
        Ok(match &self.storage {
            Storage::Dense(a) => (a * DVector::from_column_slice(v)).data.into(),
            Storage::MatrixFree => (0..m)
                .into_par_iter()
                .map(|i| {
                    let mut s = self.diag[i] * v[i];
                    for (j, vj) in v.iter().enumerate() {
                        if j != i {
                            s += self.weights[i.abs_diff(j)] * vj;
                        }
                    }
                    s
                })
                .collect(),
        })
    }

    /// `A v + b`: the discrete operator acting on a profile whose ghost nodes
    /// carry the boundary data.  Equals `apply` in regional mode.
    pub fn apply_affine(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.apply(v)?;
        if let Some(b) = &self.boundary {
            out.iter_mut().zip(b).for_each(|(o, bi)| *o += bi);
        }
        Ok(out)
    }

    /// Writes the nonzero entries as `row,col,value` with one-based site indices.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "row,col,value")?;
        let m = self.dim();
        for i in 0..m {
            for j in 0..m {
                writeln!(w, "{},{},{:e}", i + 1, j + 1, self.entry(i, j))?;
            }
        }
        Ok(())
    }
}
