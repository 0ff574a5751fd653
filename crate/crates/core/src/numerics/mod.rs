//! Dense kernels used by the trainers.

mod fista;
mod linalg;

pub use fista::{fista_nn_l1, objective, FistaConfig, FistaResult};
pub(crate) use linalg::{from_nalgebra, to_nalgebra};
pub use linalg::{adj, penrose_residuals, pinv, spectral_norm_sq, PenroseResiduals, PINV_TOL};

use crate::error::{Error, Result};

/// Dense row-major matrix; rows are instances, columns are features.
pub type Matrix = ndarray::Array2<f64>;

pub(crate) fn check_finite(m: &Matrix) -> Result<()> {
    match m.indexed_iter().find(|(_, v)| !v.is_finite()) {
        Some(((row, col), &value)) => Err(Error::InvalidInput { row, col, value }),
        None => Ok(()),
    }
}

pub(crate) fn check_non_negative(m: &Matrix) -> Result<()> {
    match m.indexed_iter().find(|(_, v)| !v.is_finite() || **v < 0.0) {
        Some(((row, col), &value)) => Err(Error::InvalidInput { row, col, value }),
        None => Ok(()),
    }
}

/// Frobenius norm.
pub fn frobenius(m: &Matrix) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}
