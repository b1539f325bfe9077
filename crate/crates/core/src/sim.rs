//! Discrete-event simulation of the physical system in original coordinates,
//! the third, model-independent validation leg.
//!
//! The chain is simulated through its jump process: in each state the total
//! exponential rate is the sum of the active clocks (arrival always; service
//! while busy; one retrial clock per nonempty orbit while idle — retrials are
//! suppressed while the server is busy, which has the same law by
//! memorylessness), a sojourn is drawn, then the jump is selected.
//!
//! Draw order per event, fixed so runs are reproducible from the seed alone:
//! first the sojourn uniform, then a jump-selection uniform over the
//! cumulative rates in the order [service | arrival | retrial orbit 1 |
//! retrial orbit 2] (busy states have no retrial entries, idle states no
//! service entry), and on a blocked arrival with equal orbits one tie-break
//! uniform (orbit 1 below one half).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{ModelParams, Provenance, Server, StationaryField};

/// Side length of the original-coordinate tally box used for the
/// exchange-symmetry diagnostic.
pub const PAIR_BOX: usize = 6;

/// Simulation run configuration.
#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    pub params: ModelParams,
    pub horizon: f64,
    pub warmup: f64,
    pub replications: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(
        params: ModelParams,
        horizon: f64,
        warmup: f64,
        replications: usize,
        seed: u64,
    ) -> Result<SimConfig> {
        if warmup.is_nan() || warmup < 0.0 || !horizon.is_finite() || horizon <= warmup {
            return Err(Error::Simulation(format!(
                "need horizon > warmup >= 0, got horizon = {horizon}, warmup = {warmup}"
            )));
        }
        if replications == 0 {
            return Err(Error::Simulation("need at least one replication".into()));
        }
        Ok(SimConfig {
            params,
            horizon,
            warmup,
            replications,
            seed,
        })
    }
}

/// A replication-averaged point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub mean: f64,
    pub sem: f64,
}

impl Estimate {
    pub fn half_width95(&self) -> f64 {
        1.959963984540054 * self.sem
    }

    pub fn half_width(&self, z: f64) -> f64 {
        z * self.sem
    }

    pub fn contains(&self, value: f64, z: f64) -> bool {
        (value - self.mean).abs() <= self.half_width(z)
    }

    fn from_reps(values: &[f64]) -> Estimate {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        if values.len() < 2 {
            return Estimate { mean, sem: 0.0 };
        }
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        Estimate {
            mean,
            sem: (var / n).sqrt(),
        }
    }
}

/// Empirical stationary estimates over a transformed-coordinate box, plus
/// system-level measures and flow diagnostics.
#[derive(Debug, Clone)]
pub struct SimEstimate {
    pub m_max: usize,
    pub n_max: usize,
    /// Transformed-state estimates, indexed `(m * (n_max + 1) + n) * 2 + k`.
    pub probs: Vec<Estimate>,
    /// Original-coordinate estimates on `[0, PAIR_BOX)^2 x {0,1}`, indexed
    /// `(i * PAIR_BOX + j) * 2 + k`; carries the exchange-symmetry diagnostic.
    pub pair_probs: Vec<Estimate>,
    pub p_busy: Estimate,
    pub mean_min: Estimate,
    pub mean_diff: Estimate,
    pub mean_total_orbit: Estimate,
    /// Rate at which blocked arrivals join an orbit.
    pub orbit_join_rate: Estimate,
    /// Rate of successful retrials.
    pub retrial_success_rate: Estimate,
    /// Heuristic divergence flag: the time-average total orbit size over the
    /// second half of the measurement window exceeds the first half by more
    /// than 25 percent plus two jobs.
    pub diverging: bool,
    pub replications: usize,
}

impl SimEstimate {
    pub fn prob(&self, m: usize, n: usize, k: Server) -> Estimate {
        self.probs[(m * (self.n_max + 1) + n) * 2 + k.index()]
    }

    pub fn pair_prob(&self, i: usize, j: usize, k: Server) -> Estimate {
        self.pair_probs[(i * PAIR_BOX + j) * 2 + k.index()]
    }
}

/// Point-estimate view of a simulation result as a stationary field.
pub struct SimField<'a>(pub &'a SimEstimate);

impl StationaryField for SimField<'_> {
    fn provenance(&self) -> Provenance {
        Provenance::Simulation
    }

    fn evaluable(&self, m: usize, n: usize) -> bool {
        m <= self.0.m_max && n <= self.0.n_max
    }

    fn prob(&self, m: usize, n: usize, k: Server) -> f64 {
        self.0.prob(m, n, k).mean
    }
}

struct RepStats {
    state_time: Vec<f64>,
    pair_time: Vec<f64>,
    busy_time: f64,
    int_min: f64,
    int_diff: f64,
    int_total: f64,
    int_total_first_half: f64,
    joins: u64,
    retrials: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

fn run_replication(
    params: &ModelParams,
    horizon: f64,
    warmup: f64,
    seed: u64,
    m_max: usize,
    n_max: usize,
) -> Result<RepStats> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lam, mu, alpha) = (params.lambda(), params.mu(), params.alpha());
    let mut stats = RepStats {
        state_time: vec![0.0; (m_max + 1) * (n_max + 1) * 2],
        pair_time: vec![0.0; PAIR_BOX * PAIR_BOX * 2],
        busy_time: 0.0,
        int_min: 0.0,
        int_diff: 0.0,
        int_total: 0.0,
        int_total_first_half: 0.0,
        joins: 0,
        retrials: 0,
    };
    let meas_len = horizon - warmup;
    let midpoint = warmup + meas_len / 2.0;

    let (mut q1, mut q2): (u64, u64) = (0, 0);
    let mut busy = false;
    let mut t = 0.0f64;

    while t < horizon {
        let total = if busy {
            lam + mu
        } else {
            lam + alpha * ((q1 > 0) as u64 + (q2 > 0) as u64) as f64
        };
        // draw 1: sojourn, uniform mapped to (0, 1]
        let u1 = 1.0 - rng.random::<f64>();
        let dt = -u1.ln() / total;
        if !dt.is_finite() {
            return Err(Error::Simulation(format!("non-finite clock draw {dt}")));
        }
        let t_next = t + dt;

        // accumulate occupancy over [t, t_next] clipped to the window
        let lo = t.max(warmup);
        let hi = t_next.min(horizon);
        if hi > lo {
            let w = hi - lo;
            let (mn, mx) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
            let diff = mx - mn;
            if mn <= m_max as u64 && diff <= n_max as u64 {
                let idx = (mn as usize * (n_max + 1) + diff as usize) * 2 + busy as usize;
                stats.state_time[idx] += w;
            }
            if q1 < PAIR_BOX as u64 && q2 < PAIR_BOX as u64 {
                let idx = (q1 as usize * PAIR_BOX + q2 as usize) * 2 + busy as usize;
                stats.pair_time[idx] += w;
            }
            if busy {
                stats.busy_time += w;
            }
            stats.int_min += w * mn as f64;
            stats.int_diff += w * diff as f64;
            stats.int_total += w * (q1 + q2) as f64;
            let hi_first = hi.min(midpoint);
            if hi_first > lo {
                stats.int_total_first_half += (hi_first - lo) * (q1 + q2) as f64;
            }
        }
        if t_next >= horizon {
            break;
        }

        // draw 2: jump selection over cumulative rates
        let u2 = rng.random::<f64>() * total;
        let in_window = t_next >= warmup;
        if busy {
            if u2 < mu {
                busy = false;
            } else {
                // blocked arrival joins the shorter orbit, coin on ties
                let to_first = if q1 < q2 {
                    true
                } else if q2 < q1 {
                    false
                } else {
                    // draw 3: tie break
                    rng.random::<f64>() < 0.5
                };
                if to_first {
                    q1 += 1;
                } else {
                    q2 += 1;
                }
                if in_window {
                    stats.joins += 1;
                }
            }
        } else if u2 < lam {
            busy = true;
        } else {
            let first_active = q1 > 0;
            let threshold = lam + if first_active { alpha } else { 0.0 };
            if first_active && u2 < threshold {
                q1 -= 1;
            } else {
                q2 -= 1;
            }
            busy = true;
            if in_window {
                stats.retrials += 1;
            }
        }
        t = t_next;
    }
    Ok(stats)
}

/// Runs the replications (concurrently, merged by replication index) and
/// aggregates time-average estimates over `[warmup, horizon]`.
pub fn simulate(config: &SimConfig, m_max: usize, n_max: usize) -> Result<SimEstimate> {
    let reps: Vec<RepStats> = (0..config.replications)
        .into_par_iter()
        .map(|r| {
            run_replication(
                &config.params,
                config.horizon,
                config.warmup,
                splitmix64(config.seed ^ splitmix64(r as u64)),
                m_max,
                n_max,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let meas = config.horizon - config.warmup;
    let n_states = (m_max + 1) * (n_max + 1) * 2;
    let per_state =
        |f: &dyn Fn(&RepStats) -> f64| Estimate::from_reps(&reps.iter().map(f).collect::<Vec<_>>());

    let mut probs = Vec::with_capacity(n_states);
    for idx in 0..n_states {
        probs.push(per_state(&|r: &RepStats| r.state_time[idx] / meas));
    }
    let mut pair_probs = Vec::with_capacity(PAIR_BOX * PAIR_BOX * 2);
    for idx in 0..PAIR_BOX * PAIR_BOX * 2 {
        pair_probs.push(per_state(&|r: &RepStats| r.pair_time[idx] / meas));
    }

    let halves: Vec<(f64, f64)> = reps
        .iter()
        .map(|r| {
            let first = r.int_total_first_half / (meas / 2.0);
            let second = (r.int_total - r.int_total_first_half) / (meas / 2.0);
            (first, second)
        })
        .collect();
    let first_mean = halves.iter().map(|h| h.0).sum::<f64>() / reps.len() as f64;
    let second_mean = halves.iter().map(|h| h.1).sum::<f64>() / reps.len() as f64;
    let diverging = second_mean > 1.25 * first_mean + 2.0;

    Ok(SimEstimate {
        m_max,
        n_max,
        probs,
        pair_probs,
        p_busy: per_state(&|r| r.busy_time / meas),
        mean_min: per_state(&|r| r.int_min / meas),
        mean_diff: per_state(&|r| r.int_diff / meas),
        mean_total_orbit: per_state(&|r| r.int_total / meas),
        orbit_join_rate: per_state(&|r| r.joins as f64 / meas),
        retrial_success_rate: per_state(&|r| r.retrials as f64 / meas),
        diverging,
        replications: config.replications,
    })
}
