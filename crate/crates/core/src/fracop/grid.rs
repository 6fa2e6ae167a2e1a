use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A function sampled at the interior nodes `u_i = i/N`, `i = 1..N-1`, with
/// boundary values attached at `u = 0` and `u = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridProfile {
    #[serde(rename = "N")]
    pub n: usize,
    pub values: Vec<f64>,
    pub left_bc: f64,
    pub right_bc: f64,
}

impl GridProfile {
    pub fn new(n: usize, values: Vec<f64>, left_bc: f64, right_bc: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("N must be >= 2, got {n}")));
        }
        if values.len() != n - 1 {
            return Err(Error::Dimension {
                expected: n - 1,
                got: values.len(),
            });
        }
        Ok(GridProfile {
            n,
            values,
            left_bc,
            right_bc,
        })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64, left_bc: f64, right_bc: f64) -> Self {
        let values = (1..n).map(|i| f(i as f64 / n as f64)).collect();
        GridProfile {
            n,
            values,
            left_bc,
            right_bc,
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        GridProfile {
            n,
            values: vec![c; n - 1],
            left_bc: c,
            right_bc: c,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Node `u_i` for a zero-based interior index.
    pub fn node(&self, idx: usize) -> f64 {
        (idx + 1) as f64 / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    /// Whether every interior value lies in `[lo - tol, hi + tol]`.
    pub fn within(&self, lo: f64, hi: f64, tol: f64) -> bool {
        self.values.iter().all(|v| *v >= lo - tol && *v <= hi + tol)
    }

    /// The mirror image `u -> 1 - u`, with boundary values exchanged.
    pub fn reflected(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        GridProfile {
            n: self.n,
            values,
            left_bc: self.right_bc,
            right_bc: self.left_bc,
        }
    }

    /// `self - other`, boundary values included.
    pub fn difference(&self, other: &GridProfile) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(GridProfile {
            n: self.n,
            values,
            left_bc: self.left_bc - other.left_bc,
            right_bc: self.right_bc - other.right_bc,
        })
    }

    pub fn sup_distance(&self, other: &GridProfile) -> Result<f64> {
        self.sup_distance_on(other, 0.0, 1.0)
    }

    /// Maximum pointwise difference over interior nodes with `lo <= u <= hi`.
    pub fn sup_distance_on(&self, other: &GridProfile, lo: f64, hi: f64) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .enumerate()
            .filter(|(i, _)| {
                let u = self.node(*i);
                u >= lo && u <= hi
            })
            .map(|(_, (a, b))| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub(crate) fn check_same_grid(&self, other: &GridProfile) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Dimension {
                expected: self.n - 1,
                got: other.n - 1,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_is_checked() {
        assert!(matches!(
            GridProfile::new(8, vec![0.0; 6], 0.0, 0.0),
            Err(Error::Dimension { .. })
        ));
        let p = GridProfile::from_fn(4, |u| u, 0.0, 1.0);
        assert_eq!(p.values, vec![0.25, 0.5, 0.75]);
        let r = p.reflected();
        assert_eq!(r.values, vec![0.75, 0.5, 0.25]);
        assert_eq!((r.left_bc, r.right_bc), (1.0, 0.0));
        assert_eq!(p.sup_distance(&r).unwrap(), 0.5);
        assert_eq!(p.sup_distance_on(&r, 0.4, 0.6).unwrap(), 0.0);
    }
}
