//! Independent checks of the cluster activation.
//!
//! [`fixed_point_q`] iterates the balance equation of a homogeneous nucleus
//! directly, without solving the quadratic. [`simulate_cluster`] runs the
//! underlying stochastic process: `n` cells with integer potentials, Poisson
//! arrivals, and soma-to-soma firing cascades.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::nucleus::ClusterParams;

pub const DEFAULT_DAMPING: f64 = 0.5;
pub const DEFAULT_BURN_IN: f64 = 0.2;
const MIN_EVENTS: u64 = 100;

/// Right-hand side of the balance equation for a current guess `q`.
pub fn balance_map(params: &ClusterParams, x: f64, q: f64) -> Result<f64> {
    let n = params.n() as f64;
    let (p, r) = (params.p(), params.r());
    let s = n - q * p * (n - 1.0);
    if s <= 0.0 {
        return Err(Error::Domain(format!(
            "n - q·p·(n-1) = {s} at q = {q}"
        )));
    }
    let num = params.lambda_plus() + r * q * (n - 1.0) * (1.0 - p) / s;
    let den = r + params.lambda_minus() + x + r * q * p * (n - 1.0) / s;
    Ok(num / den)
}

/// Damped fixed-point iteration of the balance equation from `q = 0`, with
/// the default damping of 0.5.
pub fn fixed_point_q(params: &ClusterParams, x: f64, tol: f64, max_iter: usize) -> Result<f64> {
    fixed_point_q_damped(params, x, tol, max_iter, DEFAULT_DAMPING)
}

/// Iterates `q ← (1−θ)q + θF(q)` until `|q − F(q)| ≤ tol`.
pub fn fixed_point_q_damped(
    params: &ClusterParams,
    x: f64,
    tol: f64,
    max_iter: usize,
    damping: f64,
) -> Result<f64> {
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(Error::param("damping", format!("{damping} outside (0, 1]")));
    }
    if !x.is_finite() || x < 0.0 {
        return Err(Error::param("x", format!("{x} must be finite and non-negative")));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::param("tol", "must be positive"));
    }
    let mut q = 0.0;
    let mut residual = f64::INFINITY;
    for _ in 0..=max_iter {
        let f = balance_map(params, x, q)?;
        residual = (q - f).abs();
        if residual <= tol {
            return Ok(q);
        }
        q = (1.0 - damping) * q + damping * f;
    }
    Err(Error::Convergence {
        iterations: max_iter,
        residual,
    })
}

/// Burn-in and batching used by [`simulate_cluster_with`].
#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    /// Fraction of the horizon discarded before averaging.
    pub burn_in: f64,
    /// Batch count for the batch-means standard error.
    pub batches: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            burn_in: DEFAULT_BURN_IN,
            batches: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EventCounts {
    pub excitatory_arrivals: u64,
    /// Inhibitory arrivals that found a positive potential.
    pub inhibitions: u64,
    pub firings: u64,
    /// Cascades that ended by exciting a cell.
    pub cascade_deliveries: u64,
    /// Sum of potentials when the run ended.
    pub final_potential: u64,
}

impl EventCounts {
    /// Increments minus decrements equals the potential left in the cells.
    pub fn is_balanced(&self) -> bool {
        self.excitatory_arrivals + self.cascade_deliveries
            == self.inhibitions + self.firings + self.final_potential
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub q_hat: f64,
    pub std_err: f64,
    /// Total firing events, cascades included.
    pub events: u64,
    pub horizon: f64,
    pub seed: u64,
    pub counts: EventCounts,
    /// Fewer than 100 events were simulated.
    pub insufficient_statistics: bool,
}

pub fn simulate_cluster(params: &ClusterParams, x: f64, horizon: f64, seed: u64) -> Result<SimReport> {
    simulate_cluster_with(params, x, horizon, seed, &SimConfig::default())
}

/// Simulate the nucleus as a uniformized continuous-time Markov chain.
///
/// All `n` cells share one clock of rate `R = n(λ⁺ + λ⁻ + x + r)`. At each
/// tick a cell is drawn uniformly and one of three things happens: an
/// excitatory arrival (+1), an inhibitory arrival (−1 if positive), or a
/// firing attempt, which succeeds only if the cell is excited. A firing
/// starts a cascade: with probability `p` a uniformly drawn cell fires too
/// if it is excited (and the cascade goes on, or ends if it is not); with
/// probability `1 − p` the cascade ends by exciting a uniformly drawn cell.
///
/// Every state of the uniformized chain is held for an expected `1/R`, so
/// `q_hat` is the mean excited fraction over post-burn-in ticks.
pub fn simulate_cluster_with(
    params: &ClusterParams,
    x: f64,
    horizon: f64,
    seed: u64,
    cfg: &SimConfig,
) -> Result<SimReport> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::param("horizon", format!("{horizon} must be positive")));
    }
    if !x.is_finite() || x < 0.0 {
        return Err(Error::param("x", format!("{x} must be finite and non-negative")));
    }
    if !(0.0..1.0).contains(&cfg.burn_in) {
        return Err(Error::param("burn_in", format!("{} outside [0, 1)", cfg.burn_in)));
    }
    let batches = cfg.batches.max(2) as u64;
    let n = params.n() as usize;
    let (p, r) = (params.p(), params.r());
    let exc = params.lambda_plus();
    let inh = params.lambda_minus() + x;
    let per_cell = exc + inh + r;
    let total_rate = n as f64 * per_cell;

    let ticks = (horizon * total_rate).round() as u64;
    let burn = (ticks as f64 * cfg.burn_in).round() as u64;
    let measured = ticks - burn;
    let batch_len = (measured / batches).max(1);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut potential = vec![0u64; n];
    let mut excited = 0usize;
    let mut counts = EventCounts::default();

    let exc_cut = exc / per_cell;
    let inh_cut = (exc + inh) / per_cell;

    let mut batch_sums = Vec::with_capacity(batches as usize);
    let mut acc = 0u64;
    let mut in_batch = 0u64;

    for tick in 0..ticks {
        let u: f64 = rng.random();
        let cell = rng.random_range(0..n);
        if u < exc_cut {
            counts.excitatory_arrivals += 1;
            if potential[cell] == 0 {
                excited += 1;
            }
            potential[cell] += 1;
        } else if u < inh_cut {
            if potential[cell] > 0 {
                counts.inhibitions += 1;
                potential[cell] -= 1;
                if potential[cell] == 0 {
                    excited -= 1;
                }
            }
        } else if potential[cell] > 0 {
            counts.firings += 1;
            potential[cell] -= 1;
            if potential[cell] == 0 {
                excited -= 1;
            }
            loop {
                let target = rng.random_range(0..n);
                if rng.random::<f64>() < p {
                    if potential[target] == 0 {
                        break;
                    }
                    counts.firings += 1;
                    potential[target] -= 1;
                    if potential[target] == 0 {
                        excited -= 1;
                    }
                } else {
                    counts.cascade_deliveries += 1;
                    if potential[target] == 0 {
                        excited += 1;
                    }
                    potential[target] += 1;
                    break;
                }
            }
        }

        if tick >= burn {
            acc += excited as u64;
            in_batch += 1;
            if in_batch == batch_len && (batch_sums.len() as u64) < batches {
                batch_sums.push(acc as f64 / (batch_len as f64 * n as f64));
                acc = 0;
                in_batch = 0;
            }
        }
    }
    counts.final_potential = potential.iter().sum();

    let (q_hat, std_err) = if batch_sums.is_empty() {
        let q = if in_batch > 0 {
            acc as f64 / (in_batch as f64 * n as f64)
        } else {
            excited as f64 / n as f64
        };
        (q, 0.0)
    } else {
        let k = batch_sums.len() as f64;
        let mean = batch_sums.iter().sum::<f64>() / k;
        let var = if k > 1.0 {
            batch_sums.iter().map(|b| (b - mean) * (b - mean)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        (mean, (var / k).sqrt())
    };

    Ok(SimReport {
        q_hat,
        std_err,
        events: counts.firings,
        horizon,
        seed,
        counts,
        insufficient_statistics: ticks < MIN_EVENTS,
    })
}
