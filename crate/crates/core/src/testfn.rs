//! Smooth compactly supported test functions.

use serde::{Deserialize, Serialize};

/// `exp(-1 / (1 - ((u - c)/w)^2))` on `|u - c| < w`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: f64,
    pub width: f64,
}

impl Bump {
    pub const fn new(center: f64, width: f64) -> Self {
        Bump { center, width }
    }

    pub fn eval(&self, u: f64) -> f64 {
        let s = (u - self.center) / self.width;
        let q = 1.0 - s * s;
        if q <= 0.0 {
            0.0
        } else {
            (-1.0 / q).exp()
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.width, self.center + self.width)
    }

    /// Values at the interior nodes `i/N`, `i = 1..N-1`.
    pub fn on_grid(&self, n: usize) -> Vec<f64> {
        (1..n).map(|i| self.eval(i as f64 / n as f64)).collect()
    }
}

/// The default battery: three centres and widths, all supported in `[0.1, 0.9]`.
pub fn bump_battery() -> [Bump; 3] {
    [
        Bump::new(0.3, 0.15),
        Bump::new(0.5, 0.3),
        Bump::new(0.7, 0.2),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_is_compactly_supported() {
        let b = Bump::new(0.5, 0.2);
        assert_eq!(b.eval(0.3), 0.0);
        assert_eq!(b.eval(0.71), 0.0);
        assert!((b.eval(0.5) - (-1f64).exp()).abs() < 1e-15);
        for b in bump_battery() {
            let (lo, hi) = b.support();
            assert!(lo >= 0.1 - 1e-12 && hi <= 0.9 + 1e-12);
        }
    }
}
