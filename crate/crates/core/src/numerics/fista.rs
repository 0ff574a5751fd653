//! Accelerated proximal gradient for non-negative ℓ1-regularized least squares:
//!
//! ```text
//! min_W ‖T − A·W‖²_F + l1_weight · Σ W   subject to W ≥ 0
//! ```
//!
//! On the non-negative orthant ‖W‖₁ is the plain entry sum, so the proximal
//! step is a shift by `l1_weight / L` followed by truncation of negative
//! entries to zero.

use serde::{Deserialize, Serialize};

use super::{check_finite, spectral_norm_sq, Matrix};
use crate::error::{Error, Result};

const POWER_ITERS: usize = 500;
const LIPSCHITZ_SAFETY: f64 = 1.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FistaConfig {
    pub l1_weight: f64,
    pub max_iter: usize,
    /// Stop when the objective changes by less than this fraction.
    pub rel_tol: f64,
    /// Lipschitz constant of the smooth part; estimated when absent.
    pub lipschitz: Option<f64>,
}

impl Default for FistaConfig {
    fn default() -> Self {
        FistaConfig {
            l1_weight: 1.0,
            max_iter: 200,
            rel_tol: 1e-6,
            lipschitz: None,
        }
    }
}

impl FistaConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.l1_weight.is_finite() || self.l1_weight < 0.0 {
            return Err(Error::param("l1_weight", format!("{} must be >= 0", self.l1_weight)));
        }
        if self.max_iter < 1 {
            return Err(Error::param("max_iter", "must be at least 1"));
        }
        if self.rel_tol.is_nan() || self.rel_tol <= 0.0 {
            return Err(Error::param("rel_tol", format!("{} must be > 0", self.rel_tol)));
        }
        if let Some(l) = self.lipschitz {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::param("lipschitz", format!("{l} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FistaResult {
    /// Best iterate found, entrywise ≥ 0.
    pub weights: Matrix,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `A` was identically zero; the zero solution was returned.
    pub rank_deficient: bool,
    /// Best objective seen after each iteration.
    pub trace: Vec<f64>,
}

/// `‖T − A·W‖²_F + l1_weight·‖W‖₁`.
pub fn objective(a: &Matrix, t: &Matrix, w: &Matrix, l1_weight: f64) -> f64 {
    let resid = t - &a.dot(w);
    resid.iter().map(|v| v * v).sum::<f64>() + l1_weight * w.iter().map(|v| v.abs()).sum::<f64>()
}

/// Solve the non-negative ℓ1 reconstruction problem for `W` of shape `H×D`
/// given features `A` (`N×H`) and targets `T` (`N×D`).
pub fn fista_nn_l1(a: &Matrix, t: &Matrix, cfg: &FistaConfig) -> Result<FistaResult> {
    cfg.validate()?;
    if a.nrows() != t.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "features have {} rows, targets {}",
            a.nrows(),
            t.nrows()
        )));
    }
    check_finite(a)?;
    check_finite(t)?;
    let (h, d) = (a.ncols(), t.ncols());
    let zero = Matrix::zeros((h, d));

    let lipschitz = match cfg.lipschitz {
        Some(l) => l,
        None => 2.0 * spectral_norm_sq(a, POWER_ITERS, 0) * LIPSCHITZ_SAFETY,
    };
    if a.iter().all(|v| *v == 0.0) || lipschitz == 0.0 {
        let obj = objective(a, t, &zero, cfg.l1_weight);
        return Ok(FistaResult {
            weights: zero,
            objective: obj,
            iterations: 0,
            converged: true,
            rank_deficient: true,
            trace: vec![obj],
        });
    }

    let gram = a.t().dot(a);
    let at_t = a.t().dot(t);
    let step = 1.0 / lipschitz;
    let shrink = cfg.l1_weight * step;

    let mut w = zero.clone();
    let mut y = zero;
    let mut momentum = 1.0_f64;
    let mut prev_obj = objective(a, t, &w, cfg.l1_weight);
    let mut best = w.clone();
    let mut best_obj = prev_obj;
    let mut trace = Vec::with_capacity(cfg.max_iter);
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..cfg.max_iter {
        iterations += 1;
        // gradient of the smooth part at y: 2(AᵀA·y − AᵀT)
        let grad = (gram.dot(&y) - &at_t) * 2.0;
        let mut next = &y - &(grad * step);
        next.mapv_inplace(|v| (v - shrink).max(0.0));

        let next_momentum = (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt()) / 2.0;
        let beta = (momentum - 1.0) / next_momentum;
        y = &next + &((&next - &w) * beta);
        w = next;
        momentum = next_momentum;

        let obj = objective(a, t, &w, cfg.l1_weight);
        if obj < best_obj {
            best_obj = obj;
            best.assign(&w);
        }
        trace.push(best_obj);
        if (prev_obj - obj).abs() <= cfg.rel_tol * prev_obj.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
        prev_obj = obj;
    }

    Ok(FistaResult {
        weights: best,
        objective: best_obj,
        iterations,
        converged,
        rank_deficient: false,
        trace,
    })
}
