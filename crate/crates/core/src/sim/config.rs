use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Occupation variables `η_x ∈ {0,1}` for sites `x = 1..N-1`, packed into words.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    n: usize,
    words: Vec<u64>,
    particle_count: usize,
}

impl Configuration {
    pub fn empty(n: usize) -> Self {
        assert!(n >= 2, "lattice needs N >= 2");
        Configuration {
            n,
            words: vec![0; (n - 1).div_ceil(64)],
            particle_count: 0,
        }
    }

    pub fn full(n: usize) -> Self {
        let mut c = Self::empty(n);
        for x in 1..n {
            c.set(x, true);
        }
        c
    }

    /// Builds a configuration from `occupied[x-1]` for `x = 1..N-1`.
    pub fn from_occupancy(n: usize, occupied: &[bool]) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("N must be >= 2, got {n}")));
        }
        if occupied.len() != n - 1 {
            return Err(Error::Dimension {
                expected: n - 1,
                got: occupied.len(),
            });
        }
        let mut c = Self::empty(n);
        for (i, &o) in occupied.iter().enumerate() {
            c.set(i + 1, o);
        }
        Ok(c)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sites(&self) -> usize {
        self.n - 1
    }

    pub fn particle_count(&self) -> usize {
        self.particle_count
    }

    /// `η_x` for `1 <= x <= N-1`.
    #[inline]
    pub fn get(&self, x: usize) -> bool {
        debug_assert!(x >= 1 && x < self.n);
        let i = x - 1;
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, x: usize, value: bool) {
        if self.get(x) != value {
            self.flip(x);
        }
    }

    /// Applies `σ^x`.
    #[inline]
    pub fn flip(&mut self, x: usize) {
        let i = x - 1;
        let was = self.get(x);
        self.words[i >> 6] ^= 1 << (i & 63);
        if was {
            self.particle_count -= 1;
        } else {
            self.particle_count += 1;
        }
    }

    /// Applies `σ^{x,y}`; a no-op when both sites agree.
    #[inline]
    pub fn swap(&mut self, x: usize, y: usize) {
        if self.get(x) != self.get(y) {
            self.flip(x);
            self.flip(y);
        }
    }

    pub fn occupancy(&self) -> Vec<bool> {
        (1..self.n).map(|x| self.get(x)).collect()
    }

    /// Adds `η_x` to `acc[x-1]`.
    pub fn accumulate_into(&self, acc: &mut [f64]) {
        for (i, a) in acc.iter_mut().enumerate() {
            if self.get(i + 1) {
                *a += 1.0;
            }
        }
    }

    /// Mean occupation over `bins` equal cells of `[0,1]`, by site position `x/N`.
    pub fn binned(&self, bins: usize) -> Vec<f64> {
        let mut sum = vec![0.0; bins];
        let mut count = vec![0usize; bins];
        for x in 1..self.n {
            let b = ((x * bins) / self.n).min(bins - 1);
            count[b] += 1;
            if self.get(x) {
                sum[b] += 1.0;
            }
        }
        sum.iter()
            .zip(&count)
            .map(|(s, c)| if *c > 0 { s / *c as f64 } else { f64::NAN })
            .collect()
    }
}

/// Product measure with marginals `g(x/N)`.
pub fn sample_initial(g: &dyn Fn(f64) -> f64, n: usize, seed: u64) -> Result<Configuration> {
    if n < 2 {
        return Err(Error::domain(format!("N must be >= 2, got {n}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut c = Configuration::empty(n);
    for x in 1..n {
        let p = g(x as f64 / n as f64);
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!(
                "initial profile value {p} at u = {} outside [0,1]",
                x as f64 / n as f64
            )));
        }
        if rng.random::<f64>() < p {
            c.set(x, true);
        }
    }
    Ok(c)
}

/// `⟨π^N, G⟩ = (N-1)^{-1} Σ_x G(x/N) η_x` with `g[x-1] = G(x/N)`.
pub fn empirical_pairing(config: &Configuration, g: &[f64]) -> Result<f64> {
    if g.len() != config.sites() {
        return Err(Error::Dimension {
            expected: config.sites(),
            got: g.len(),
        });
    }
    let s: f64 = g
        .iter()
        .enumerate()
        .filter(|(i, _)| config.get(i + 1))
        .map(|(_, v)| v)
        .sum();
    Ok(s / config.sites() as f64)
}
