use nalgebra::DMatrix;
use ndarray::Axis;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_finite, frobenius, Matrix};
use crate::error::{Error, Result};

/// Default relative cutoff for singular values in [`pinv`].
pub const PINV_TOL: f64 = 1e-10;

/// Shift a feature matrix into the non-negative orthant.
///
/// Each column is mapped affinely onto `[0, 1]` (constant columns become
/// 0.5), then standardized with the `N − 1` sample deviation (zero-variance
/// columns become 0). Finally one scalar is added to every entry so that the
/// global minimum is 0.
pub fn adj(x: &Matrix) -> Result<Matrix> {
    let (rows, cols) = x.dim();
    if rows == 0 || cols == 0 {
        return Err(Error::DimensionMismatch("adj of an empty matrix".into()));
    }
    check_finite(x)?;
    if rows < 2 {
        return Err(Error::StandardizationDegenerate);
    }
    let mut out = x.clone();
    for mut col in out.axis_iter_mut(Axis(1)) {
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            col.mapv_inplace(|v| (v - lo) / (hi - lo));
        } else {
            col.fill(0.5);
        }
        let mean = col.sum() / rows as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (rows as f64 - 1.0);
        let sd = var.sqrt();
        if sd > 0.0 {
            col.mapv_inplace(|v| (v - mean) / sd);
        } else {
            col.fill(0.0);
        }
    }
    let min = out.iter().copied().fold(f64::INFINITY, f64::min);
    let shift = (-min).max(0.0);
    if shift > 0.0 {
        out.mapv_inplace(|v| v + shift);
    }
    Ok(out)
}

/// Power-iteration estimate of the largest squared singular value.
pub fn spectral_norm_sq(a: &Matrix, iters: usize, seed: u64) -> f64 {
    let cols = a.ncols();
    if a.is_empty() {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: ndarray::Array1<f64> = ndarray::Array1::from_shape_fn(cols, |_| rng.random_range(0.5_f64..1.5));
    let mut estimate = 0.0_f64;
    for _ in 0..iters.max(1) {
        let norm = v.dot(&v).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v /= norm;
        let av = a.dot(&v);
        let next = av.dot(&av);
        v = a.t().dot(&av);
        if (next - estimate).abs() <= 1e-13 * next {
            return next;
        }
        estimate = next;
    }
    estimate
}

pub(crate) fn to_nalgebra(m: &Matrix) -> DMatrix<f64> {
    let (r, c) = m.dim();
    DMatrix::from_fn(r, c, |i, j| m[[i, j]])
}

pub(crate) fn from_nalgebra(m: &DMatrix<f64>) -> Matrix {
    Matrix::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Moore–Penrose pseudoinverse by singular value decomposition.
///
/// Singular values below `tol · σ_max` are treated as zero.
pub fn pinv(m: &Matrix, tol: f64) -> Result<Matrix> {
    if m.is_empty() {
        return Err(Error::DimensionMismatch("pinv of an empty matrix".into()));
    }
    check_finite(m)?;
    let (rows, cols) = m.dim();
    let fm = faer::Mat::<f64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let svd = fm
        .thin_svd()
        .map_err(|e| Error::Domain(format!("singular value decomposition failed: {e:?}")))?;
    let (u, v) = (svd.U(), svd.V());
    let s = svd.S().column_vector();
    let smax = (0..s.nrows()).map(|k| s[k]).fold(0.0, f64::max);
    let cutoff = tol * smax;
    let mut out = Matrix::zeros((cols, rows));
    for k in 0..s.nrows() {
        let sk = s[k];
        if sk <= cutoff || sk == 0.0 {
            continue;
        }
        for i in 0..cols {
            let scale = v[(i, k)] / sk;
            if scale == 0.0 {
                continue;
            }
            for j in 0..rows {
                out[(i, j)] += scale * u[(j, k)];
            }
        }
    }
    Ok(out)
}

/// Frobenius norms of the four Penrose residuals for a candidate `g ≈ m⁺`.
#[derive(Debug, Clone, Copy)]
pub struct PenroseResiduals {
    /// ‖M G M − M‖
    pub mgm: f64,
    /// ‖G M G − G‖
    pub gmg: f64,
    /// ‖(M G)ᵀ − M G‖
    pub mg_sym: f64,
    /// ‖(G M)ᵀ − G M‖
    pub gm_sym: f64,
}

impl PenroseResiduals {
    pub fn max(&self) -> f64 {
        self.mgm.max(self.gmg).max(self.mg_sym).max(self.gm_sym)
    }
}

pub fn penrose_residuals(m: &Matrix, g: &Matrix) -> PenroseResiduals {
    let mg = m.dot(g);
    let gm = g.dot(m);
    PenroseResiduals {
        mgm: frobenius(&(mg.dot(m) - m)),
        gmg: frobenius(&(gm.dot(g) - g)),
        mg_sym: frobenius(&(mg.t().to_owned() - &mg)),
        gm_sym: frobenius(&(gm.t().to_owned() - &gm)),
    }
}
