use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::fracop::OperatorMatrix;

/// Solver for `K = diag(d) - s·A` with `A` a symmetric nonpositive operator,
/// so that `K` is symmetric positive definite.  Dense grids are factored once;
/// matrix-free grids use Jacobi-preconditioned conjugate gradients.
pub struct SpdSolver<'a> {
    inner: Inner<'a>,
    iterations: usize,
}

enum Inner<'a> {
    Dense(Cholesky<f64, Dyn>),
    Iterative {
        op: &'a OperatorMatrix,
        diag: Vec<f64>,
        scale: f64,
        tol: f64,
    },
    Diagonal(Vec<f64>),
}

impl<'a> SpdSolver<'a> {
    pub fn new(op: Option<&'a OperatorMatrix>, diag: Vec<f64>, scale: f64) -> Result<Self> {
        let inner = match op {
            None => Inner::Diagonal(diag),
            Some(_) if scale == 0.0 => Inner::Diagonal(diag),
            Some(op) => match op.dense() {
                Some(a) => {
                    let mut k: DMatrix<f64> = a * (-scale);
                    for (i, d) in diag.iter().enumerate() {
                        k[(i, i)] += d;
                    }
                    let chol = Cholesky::new(k).ok_or_else(|| {
                        Error::Numerical(format!(
                            "system matrix of size {} is not positive definite",
                            diag.len()
                        ))
                    })?;
                    Inner::Dense(chol)
                }
                None => Inner::Iterative {
                    op,
                    diag,
                    scale,
                    tol: 1e-13,
                },
            },
        };
        if let Inner::Diagonal(d) = &inner {
            if let Some(bad) = d.iter().position(|x| !(*x > 0.0)) {
                return Err(Error::Numerical(format!("zero pivot at node {}", bad + 1)));
            }
        }
        Ok(SpdSolver {
            inner,
            iterations: 0,
        })
    }

    /// Total conjugate-gradient iterations spent so far (zero for direct solves).
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn solve(&mut self, rhs: &[f64]) -> Result<Vec<f64>> {
        match &self.inner {
            Inner::Dense(chol) => Ok(chol.solve(&DVector::from_column_slice(rhs)).data.into()),
            Inner::Diagonal(d) => Ok(rhs.iter().zip(d).map(|(r, d)| r / d).collect()),
            Inner::Iterative {
                op,
                diag,
                scale,
                tol,
            } => {
                let (x, it) = conjugate_gradient(op, diag, *scale, rhs, *tol)?;
                self.iterations += it;
                Ok(x)
            }
        }
    }
}

fn conjugate_gradient(
    op: &OperatorMatrix,
    diag: &[f64],
    scale: f64,
    rhs: &[f64],
    tol: f64,
) -> Result<(Vec<f64>, usize)> {
    let m = rhs.len();
    let apply = |v: &[f64]| -> Result<Vec<f64>> {
        let av = op.apply(v)?;
        Ok(av
            .iter()
            .zip(v)
            .zip(diag)
            .map(|((a, x), d)| d * x - scale * a)
            .collect())
    };
    let precond: Vec<f64> = op
        .diagonal()
        .iter()
        .zip(diag)
        .map(|(a, d)| 1.0 / (d - scale * a))
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    let bnorm = dot(rhs, rhs).sqrt();
    if bnorm == 0.0 {
        return Ok((vec![0.0; m], 0));
    }
    let mut x: Vec<f64> = rhs.iter().zip(&precond).map(|(b, p)| b * p).collect();
    let ax = apply(&x)?;
    let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut z: Vec<f64> = r.iter().zip(&precond).map(|(r, p)| r * p).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=10 * m.max(100) {
        let ap = apply(&p)?;
        let step = rz / dot(&p, &ap);
        for i in 0..m {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        if dot(&r, &r).sqrt() <= tol * bnorm {
            return Ok((x, it));
        }
        for i in 0..m {
            z[i] = r[i] * precond[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..m {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Numerical(format!(
        "conjugate gradients did not converge on {m} unknowns"
    )))
}
