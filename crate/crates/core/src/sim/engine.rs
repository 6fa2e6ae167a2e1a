use rand::Rng;
use rand_distr::{weighted::WeightedAliasIndex, Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::Configuration;
use crate::error::{Error, Result};
use crate::kernel::{JumpKernel, ModelParams};
use crate::rng::{rng_from_seed, SimRng};

/// Largest `N` whose snapshots keep the full occupation bits.
pub const FULL_SNAPSHOT_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SnapshotMode {
    /// Full bits up to `FULL_SNAPSHOT_LIMIT`, binned above.
    #[default]
    Auto,
    Full,
    Binned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    /// When false the reservoirs are switched off and particles are conserved.
    pub reservoirs: bool,
    /// Record every state-changing event (needed for martingale replay).
    pub record_events: bool,
    pub snapshots: SnapshotMode,
    /// Number of cells used by binned snapshots.
    pub bins: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            reservoirs: true,
            record_events: false,
            snapshots: SnapshotMode::Auto,
            bins: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SnapshotData {
    Full(Configuration),
    Binned(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub data: SnapshotData,
}

/// A state-changing transition at macroscopic time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Event {
    Swap { t: f64, x: u32, y: u32 },
    Flip { t: f64, x: u32 },
}

impl Event {
    pub fn time(&self) -> f64 {
        match *self {
            Event::Swap { t, .. } | Event::Flip { t, .. } => t,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceStats {
    pub pair_proposals: u64,
    /// Proposals whose target fell outside the lattice.
    pub pair_outside: u64,
    /// Proposals between sites with equal occupation.
    pub pair_noops: u64,
    pub swaps: u64,
    pub flip_proposals: u64,
    pub flips: u64,
    /// Accepted flips per site `x = 1..N-1`.
    pub flips_per_site: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub params: ModelParams,
    pub seed: u64,
    pub t_end: f64,
    pub initial: Configuration,
    pub snapshots: Vec<Snapshot>,
    /// Number of state-changing events.
    pub event_count: u64,
    pub elapsed_micro_time: f64,
    pub stats: AcceptanceStats,
    pub events: Option<Vec<Event>>,
}

impl SimResult {
    pub fn final_config(&self) -> Option<&Configuration> {
        match self.snapshots.last().map(|s| &s.data) {
            Some(SnapshotData::Full(c)) => Some(c),
            _ => None,
        }
    }
}

/// Outcome of one draw from the proposal mechanism at a fixed configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Proposal {
    Outside,
    NoOp,
    Swap(usize, usize),
    FlipRejected(usize),
    Flip(usize),
}

/// Proposal tables shared read-only by every replica of one parameter set.
#[derive(Debug, Clone)]
pub struct Engine {
    params: ModelParams,
    kernel: JumpKernel,
    options: SimOptions,
    /// `r_N^-(x/N)` and `r_N^+(x/N)`, index `x - 1`.
    r_minus: Vec<f64>,
    r_plus: Vec<f64>,
    flip_sites: WeightedAliasIndex<f64>,
    pair_rate: f64,
    flip_rate: f64,
}

/// Exact exit rate `Θ(N)[Σ_{x<y} p(y-x) + κN^{-θ} Σ_x (r^- c_x(α) + r^+ c_x(β))]`,
/// counting pair clocks whether or not they change the state.
pub fn exit_rate(params: &ModelParams, kernel: &JumpKernel, config: &Configuration) -> f64 {
    let n = params.n;
    let mut pairs = 0.0;
    for d in 1..n - 1 {
        pairs += (n - 1 - d) as f64 * kernel.transition_prob(d as i64);
    }
    let mut flips = 0.0;
    for x in 1..n {
        let (rm, rp) = kernel.reservoir_rates(x as i64).expect("site in range");
        flips += rm * c_rate(config.get(x), params.alpha) + rp * c_rate(config.get(x), params.beta);
    }
    params.time_scale() * (pairs + params.reservoir_strength() * flips)
}

/// `c_x(η; φ) = η(1-φ) + (1-η)φ`.
#[inline]
fn c_rate(occupied: bool, phi: f64) -> f64 {
    if occupied {
        1.0 - phi
    } else {
        phi
    }
}

impl Engine {
    pub fn new(params: &ModelParams, kernel: &JumpKernel, options: SimOptions) -> Result<Self> {
        params.validate_ranges()?;
        if kernel.n() != params.n || kernel.gamma() != params.gamma {
            return Err(Error::Consistency(format!(
                "kernel built for (gamma={}, N={}) but parameters are (gamma={}, N={})",
                kernel.gamma(),
                kernel.n(),
                params.gamma,
                params.n
            )));
        }
        if options.bins == 0 {
            return Err(Error::domain("bins must be >= 1"));
        }
        let n = params.n;
        let theta_n = params.time_scale();
        let r_minus = kernel.tail_left();
        let r_plus = kernel.tail_right();
        let bound: Vec<f64> = r_minus.iter().zip(&r_plus).map(|(a, b)| a + b).collect();
        let flip_sites = WeightedAliasIndex::new(bound.clone())
            .map_err(|e| Error::Numerical(format!("reservoir alias table: {e}")))?;

        // Each ordered proposal (x, x+z) has rate pair_rate · p(z) / ((N-1) P)
        // with P = Σ_{1<=|z|<=N-2} p(z); both orientations together give p(z).
        let pair_rate = if n >= 3 {
            theta_n * (n - 1) as f64 * kernel.displacement_mass() / 2.0
        } else {
            0.0
        };
        let flip_rate = if options.reservoirs {
            theta_n * params.reservoir_strength() * bound.iter().sum::<f64>()
        } else {
            0.0
        };
        Ok(Engine {
            params: *params,
            kernel: kernel.clone(),
            options,
            r_minus,
            r_plus,
            flip_sites,
            pair_rate,
            flip_rate,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn kernel(&self) -> &JumpKernel {
        &self.kernel
    }

    /// Total proposal rate in macroscopic time.
    pub fn proposal_rate(&self) -> f64 {
        self.pair_rate + self.flip_rate
    }

    pub fn pair_rate(&self) -> f64 {
        self.pair_rate
    }

    pub fn flip_rate(&self) -> f64 {
        self.flip_rate
    }

    /// Draws one proposal at `config` without applying it.
    #[inline]
    pub fn propose<R: Rng + ?Sized>(&self, rng: &mut R, config: &Configuration) -> Proposal {
        let n = self.params.n;
        let total = self.pair_rate + self.flip_rate;
        if rng.random::<f64>() * total < self.pair_rate {
            let x = rng.random_range(1..n);
            let z = self
                .kernel
                .sample_displacement(rng)
                .expect("N >= 3 when pair rate is positive");
            let y = x as i64 + z;
            if y < 1 || y >= n as i64 {
                return Proposal::Outside;
            }
            let y = y as usize;
            if config.get(x) == config.get(y) {
                Proposal::NoOp
            } else {
                Proposal::Swap(x, y)
            }
        } else {
            let x = self.flip_sites.sample(rng) + 1;
            let occ = config.get(x);
            let rm = self.r_minus[x - 1];
            let rp = self.r_plus[x - 1];
            let rate = rm * c_rate(occ, self.params.alpha) + rp * c_rate(occ, self.params.beta);
            if rng.random::<f64>() * (rm + rp) < rate {
                Proposal::Flip(x)
            } else {
                Proposal::FlipRejected(x)
            }
        }
    }

    fn snapshot(&self, t: f64, config: &Configuration) -> Snapshot {
        let full = match self.options.snapshots {
            SnapshotMode::Full => true,
            SnapshotMode::Binned => false,
            SnapshotMode::Auto => self.params.n <= FULL_SNAPSHOT_LIMIT,
        };
        let data = if full {
            SnapshotData::Full(config.clone())
        } else {
            SnapshotData::Binned(config.binned(self.options.bins))
        };
        Snapshot { t, data }
    }

    /// Runs one trajectory from `init` up to macroscopic time `t_end`.
    pub fn run(
        &self,
        init: &Configuration,
        t_end: f64,
        observe_at: &[f64],
        seed: u64,
    ) -> Result<SimResult> {
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(Error::domain(format!("t_end must be >= 0, got {t_end}")));
        }
        if init.n() != self.params.n {
            return Err(Error::Consistency(format!(
                "initial configuration has N = {} but parameters have N = {}",
                init.n(),
                self.params.n
            )));
        }
        if observe_at.iter().any(|t| !(*t >= 0.0 && *t <= t_end)) {
            return Err(Error::domain("observation times must lie in [0, t_end]"));
        }
        if observe_at.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain(
                "observation times must be strictly increasing",
            ));
        }

        let mut rng: SimRng = rng_from_seed(seed);
        let mut config = init.clone();
        let mut stats = AcceptanceStats {
            flips_per_site: vec![0; self.params.n - 1],
            ..Default::default()
        };
        let mut events = self.options.record_events.then(Vec::new);
        let mut snapshots = Vec::with_capacity(observe_at.len());
        let mut next_obs = 0usize;
        let mut event_count = 0u64;
        let total = self.proposal_rate();
        let mut t = 0.0;

        loop {
            let wait: f64 = if total > 0.0 {
                rng.sample::<f64, _>(Exp1) / total
            } else {
                f64::INFINITY
            };
            let t_next = t + wait;
            while next_obs < observe_at.len() && observe_at[next_obs] < t_next {
                snapshots.push(self.snapshot(observe_at[next_obs], &config));
                next_obs += 1;
            }
            if t_next > t_end {
                break;
            }
            t = t_next;
            match self.propose(&mut rng, &config) {
                Proposal::Outside => {
                    stats.pair_proposals += 1;
                    stats.pair_outside += 1;
                }
                Proposal::NoOp => {
                    stats.pair_proposals += 1;
                    stats.pair_noops += 1;
                }
                Proposal::Swap(x, y) => {
                    stats.pair_proposals += 1;
                    stats.swaps += 1;
                    config.swap(x, y);
                    event_count += 1;
                    if let Some(ev) = events.as_mut() {
                        ev.push(Event::Swap {
                            t,
                            x: x as u32,
                            y: y as u32,
                        });
                    }
                }
                Proposal::FlipRejected(_) => stats.flip_proposals += 1,
                Proposal::Flip(x) => {
                    stats.flip_proposals += 1;
                    stats.flips += 1;
                    stats.flips_per_site[x - 1] += 1;
                    config.flip(x);
                    event_count += 1;
                    if let Some(ev) = events.as_mut() {
                        ev.push(Event::Flip { t, x: x as u32 });
                    }
                }
            }
        }

        Ok(SimResult {
            params: self.params,
            seed,
            t_end,
            initial: init.clone(),
            snapshots,
            event_count,
            elapsed_micro_time: t_end * self.params.time_scale(),
            stats,
            events,
        })
    }
}

/// Simulates with default options (reservoirs on, no event log).
pub fn simulate(
    params: &ModelParams,
    kernel: &JumpKernel,
    init: &Configuration,
    t_end: f64,
    observe_at: &[f64],
    seed: u64,
) -> Result<SimResult> {
    simulate_with(
        params,
        kernel,
        init,
        t_end,
        observe_at,
        seed,
        SimOptions::default(),
    )
}

pub fn simulate_with(
    params: &ModelParams,
    kernel: &JumpKernel,
    init: &Configuration,
    t_end: f64,
    observe_at: &[f64],
    seed: u64,
    options: SimOptions,
) -> Result<SimResult> {
    Engine::new(params, kernel, options)?.run(init, t_end, observe_at, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::build_kernel;
    use crate::sim::sample_initial;
    use crate::stats;

    fn params(n: usize, alpha: f64, beta: f64) -> ModelParams {
        ModelParams::new(1.5, alpha, beta, 1.0, 0.0, n).unwrap()
    }

    #[test]
    fn conserves_particles_without_reservoirs() {
        let p = params(64, 0.2, 0.8);
        let k = build_kernel(1.5, 64).unwrap();
        let init = sample_initial(&|u| u, 64, 5).unwrap();
        let opts = SimOptions {
            reservoirs: false,
            ..Default::default()
        };
        let obs: Vec<f64> = (1..=10).map(|i| i as f64 * 0.01).collect();
        let r = simulate_with(&p, &k, &init, 0.1, &obs, 9, opts).unwrap();
        assert!(r.event_count > 100);
        assert_eq!(r.stats.flips, 0);
        for s in &r.snapshots {
            let SnapshotData::Full(c) = &s.data else {
                panic!("expected full snapshot")
            };
            assert_eq!(c.particle_count(), init.particle_count());
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let p = params(48, 0.2, 0.8);
        let k = build_kernel(1.5, 48).unwrap();
        let init = sample_initial(&|_| 0.5, 48, 1).unwrap();
        let a = simulate(&p, &k, &init, 0.05, &[0.01, 0.05], 77).unwrap();
        let b = simulate(&p, &k, &init, 0.05, &[0.01, 0.05], 77).unwrap();
        assert_eq!(a, b);
        let c = simulate(&p, &k, &init, 0.05, &[0.01, 0.05], 78).unwrap();
        assert_ne!(a.snapshots, c.snapshots);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = params(32, 0.2, 0.8);
        let k = build_kernel(1.5, 32).unwrap();
        let wrong = build_kernel(1.5, 33).unwrap();
        let init = Configuration::empty(32);
        assert!(matches!(
            simulate(&p, &k, &init, -1.0, &[], 0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            simulate(&p, &wrong, &init, 1.0, &[], 0),
            Err(Error::Consistency(_))
        ));
        assert!(matches!(
            simulate(&p, &k, &init, 1.0, &[0.5, 0.2], 0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            simulate(&p, &k, &init, 1.0, &[2.0], 0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn snapshot_modes() {
        let p = params(40, 0.2, 0.8);
        let k = build_kernel(1.5, 40).unwrap();
        let init = Configuration::full(40);
        let opts = SimOptions {
            snapshots: SnapshotMode::Binned,
            bins: 4,
            ..Default::default()
        };
        let r = simulate_with(&p, &k, &init, 0.0, &[0.0], 1, opts).unwrap();
        assert_eq!(r.snapshots[0].data, SnapshotData::Binned(vec![1.0; 4]));
        assert_eq!(r.elapsed_micro_time, 0.0);
    }

    #[test]
    fn acceptance_reproduces_exit_rate() {
        let n = 40;
        let p = params(n, 0.1, 0.7);
        let k = build_kernel(1.5, n).unwrap();
        let config = sample_initial(&|u| u, n, 3).unwrap();
        let eng = Engine::new(&p, &k, SimOptions::default()).unwrap();
        let mut rng = rng_from_seed(11);
        let draws = 400_000;
        let mut accepted_or_clock = 0u64;
        for _ in 0..draws {
            match eng.propose(&mut rng, &config) {
                Proposal::NoOp | Proposal::Swap(..) | Proposal::Flip(_) => accepted_or_clock += 1,
                Proposal::Outside | Proposal::FlipRejected(_) => {}
            }
        }
        let frac = accepted_or_clock as f64 / draws as f64;
        let est = eng.proposal_rate() * frac;
        let exact = exit_rate(&p, &k, &config);
        let se = eng.proposal_rate() * (frac * (1.0 - frac) / draws as f64).sqrt();
        assert!((est - exact).abs() < 4.0 * se, "{est} vs {exact} (se {se})");
    }

    #[test]
    fn site_one_flips_most() {
        let n = 64;
        let p = params(n, 0.2, 0.8);
        let k = build_kernel(1.5, n).unwrap();
        let init = sample_initial(&|_| 0.5, n, 2).unwrap();
        let r = simulate(&p, &k, &init, 2.0, &[], 4).unwrap();
        let f = &r.stats.flips_per_site;
        assert!(f[0] > 0);
        assert!(f[1..n / 2].iter().all(|c| f[0] > *c));
    }

    #[test]
    fn equal_reservoirs_keep_bernoulli_density() {
        let n = 32;
        let rho = 0.3;
        let p = params(n, rho, rho);
        let k = build_kernel(1.5, n).unwrap();
        let init = sample_initial(&|_| rho, n, 8).unwrap();
        let obs: Vec<f64> = (1..=2000).map(|i| i as f64 * 0.5).collect();
        let r = simulate(&p, &k, &init, 1000.0, &obs, 21).unwrap();
        assert!(r.event_count > 1_000_000);
        let series: Vec<f64> = r
            .snapshots
            .iter()
            .map(|s| match &s.data {
                SnapshotData::Full(c) => c.particle_count() as f64 / c.sites() as f64,
                SnapshotData::Binned(_) => unreachable!(),
            })
            .collect();
        let m = stats::mean(&series);
        let se = stats::batch_means_se(&series, 40);
        assert!((m - rho).abs() < 3.0 * se, "mean {m}, se {se}");
        // no drift between the two halves of the run
        let (a, b) = series.split_at(series.len() / 2);
        let drift = (stats::mean(a) - stats::mean(b)).abs();
        let se_h =
            (stats::batch_means_se(a, 10).powi(2) + stats::batch_means_se(b, 10).powi(2)).sqrt();
        assert!(drift < 3.0 * se_h, "drift {drift}, se {se_h}");
    }
}
