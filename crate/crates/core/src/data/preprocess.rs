use nalgebra::SymmetricEigen;
use ndarray::Axis;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{check_finite, from_nalgebra, to_nalgebra, Matrix};

pub const DEFAULT_ZCA_EPS: f64 = 1e-5;

/// Per-column affine map onto `[0, 1]` using stored column ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitInterval {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl UnitInterval {
    pub fn fit(x: &Matrix) -> Result<Self> {
        check_finite(x)?;
        let (lo, hi) = x
            .axis_iter(Axis(1))
            .map(|c| {
                c.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
                    (l.min(v), h.max(v))
                })
            })
            .unzip();
        Ok(UnitInterval { lo, hi })
    }

    /// Constant columns map to 0.5; values outside the fitted range are
    /// clamped.
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        check_width(x, self.lo.len())?;
        let mut out = x.clone();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (lo, hi) = (self.lo[j], self.hi[j]);
            if hi > lo {
                col.mapv_inplace(|v| ((v - lo) / (hi - lo)).clamp(0.0, 1.0));
            } else {
                col.fill(0.5);
            }
        }
        Ok(out)
    }
}

pub fn normalize_unit_interval(x: &Matrix) -> Result<Matrix> {
    UnitInterval::fit(x)?.apply(x)
}

/// Per-column zero mean and unit sample variance.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    mean: Vec<f64>,
    sd: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Result<Self> {
        check_finite(x)?;
        if x.nrows() < 2 {
            return Err(Error::StandardizationDegenerate);
        }
        let n = x.nrows() as f64;
        let mut mean = Vec::with_capacity(x.ncols());
        let mut sd = Vec::with_capacity(x.ncols());
        for col in x.axis_iter(Axis(1)) {
            let m = col.sum() / n;
            let v = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
            mean.push(m);
            sd.push(v.sqrt());
        }
        Ok(Standardizer { mean, sd })
    }

    /// Zero-variance columns become 0.
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        check_width(x, self.mean.len())?;
        let mut out = x.clone();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.mean[j], self.sd[j]);
            if s > 0.0 {
                col.mapv_inplace(|v| (v - m) / s);
            } else {
                col.fill(0.0);
            }
        }
        Ok(out)
    }
}

pub fn standardize(x: &Matrix) -> Result<Matrix> {
    Standardizer::fit(x)?.apply(x)
}

/// ZCA whitening: `(X − μ) · U diag((λ+ε)^−½) Uᵀ` from the eigendecomposition
/// of the sample covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct Zca {
    mean: ndarray::Array1<f64>,
    transform: Matrix,
}

impl Zca {
    pub fn fit(x: &Matrix, eps: f64) -> Result<Self> {
        if eps.is_nan() || eps <= 0.0 {
            return Err(Error::param("eps", format!("{eps} must be positive")));
        }
        check_finite(x)?;
        if x.nrows() < 2 {
            return Err(Error::StandardizationDegenerate);
        }
        let mean = x.mean_axis(Axis(0)).expect("non-empty");
        let centered = x - &mean;
        let cov = centered.t().dot(&centered) / (x.nrows() as f64 - 1.0);
        let eig = SymmetricEigen::new(to_nalgebra(&cov));
        let scale = eig.eigenvalues.map(|l| 1.0 / (l.max(0.0) + eps).sqrt());
        let u = &eig.eigenvectors;
        let w = u * nalgebra::DMatrix::from_diagonal(&scale) * u.transpose();
        Ok(Zca {
            mean,
            transform: from_nalgebra(&w),
        })
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        check_width(x, self.mean.len())?;
        Ok((x - &self.mean).dot(&self.transform))
    }
}

/// Whitening followed by the unit-interval map.
pub fn zca_whiten(x: &Matrix, eps: f64) -> Result<Matrix> {
    let white = Zca::fit(x, eps)?.apply(x)?;
    normalize_unit_interval(&white)
}

fn check_width(x: &Matrix, expected: usize) -> Result<()> {
    if x.ncols() != expected {
        return Err(Error::DimensionMismatch(format!(
            "fitted on {expected} columns, got {}",
            x.ncols()
        )));
    }
    Ok(())
}

/// One preprocessing directive from a manifest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Step {
    UnitInterval,
    Standardize,
    Zca {
        #[serde(default = "default_eps")]
        eps: f64,
    },
}

fn default_eps() -> f64 {
    DEFAULT_ZCA_EPS
}

#[derive(Debug, Clone)]
enum Fitted {
    Unit(UnitInterval),
    Std(Standardizer),
    Zca(Zca),
}

/// Directives fitted on one matrix (the training split) for replay on
/// others. A unit-interval map always closes the pipeline so the output
/// lies in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct Pipeline {
    stages: Vec<Fitted>,
}

impl Pipeline {
    pub fn fit(x: &Matrix, steps: &[Step]) -> Result<Self> {
        let mut stages = Vec::with_capacity(steps.len() + 1);
        let mut cur = x.clone();
        for step in steps {
            let stage = match *step {
                Step::UnitInterval => Fitted::Unit(UnitInterval::fit(&cur)?),
                Step::Standardize => Fitted::Std(Standardizer::fit(&cur)?),
                Step::Zca { eps } => Fitted::Zca(Zca::fit(&cur, eps)?),
            };
            cur = apply_stage(&stage, &cur)?;
            stages.push(stage);
        }
        stages.push(Fitted::Unit(UnitInterval::fit(&cur)?));
        Ok(Pipeline { stages })
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        let mut cur = x.clone();
        for stage in &self.stages {
            cur = apply_stage(stage, &cur)?;
        }
        Ok(cur)
    }
}

fn apply_stage(stage: &Fitted, x: &Matrix) -> Result<Matrix> {
    match stage {
        Fitted::Unit(u) => u.apply(x),
        Fitted::Std(s) => s.apply(x),
        Fitted::Zca(z) => z.apply(x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_shape_fn((rows, cols), |_| StandardNormal.sample(&mut rng))
    }

    fn covariance(x: &Matrix) -> Matrix {
        let mean = x.mean_axis(Axis(0)).unwrap();
        let c = x - &mean;
        c.t().dot(&c) / (x.nrows() as f64 - 1.0)
    }

    #[test]
    fn unit_interval_examples() {
        assert_eq!(normalize_unit_interval(&array![[2.0], [4.0]]).unwrap(), array![[0.0], [1.0]]);
        assert_eq!(normalize_unit_interval(&array![[7.0], [7.0]]).unwrap(), array![[0.5], [0.5]]);
        let fitted = UnitInterval::fit(&array![[0.0], [10.0]]).unwrap();
        assert_eq!(fitted.apply(&array![[-5.0], [5.0], [20.0]]).unwrap(), array![[0.0], [0.5], [1.0]]);
    }

    #[test]
    fn standardize_moments() {
        let x = gaussian(200, 3, 4) * 3.0 + 1.0;
        let s = standardize(&x).unwrap();
        for col in s.axis_iter(Axis(1)) {
            let m = col.sum() / 200.0;
            let v = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / 199.0;
            assert!(m.abs() < 1e-12);
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zca_output_covariance_is_identity() {
        let mixing = array![[1.0, 0.5, 0.0, 0.2], [0.0, 1.0, 0.3, 0.0], [0.4, 0.0, 2.0, 0.1], [0.0, 0.0, 0.0, 0.5]];
        let x = gaussian(5000, 4, 8).dot(&mixing);
        let z = Zca::fit(&x, 1e-12).unwrap();
        let cov = covariance(&z.apply(&x).unwrap());
        let err = (&cov - &Matrix::eye(4)).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn zca_of_white_data_is_near_identity_transform() {
        let x = gaussian(20000, 3, 2);
        // whiten once with a tiny ridge so the sample covariance is exactly I
        let white = Zca::fit(&x, 1e-12).unwrap().apply(&x).unwrap();
        let z = Zca::fit(&white, DEFAULT_ZCA_EPS).unwrap();
        let err = (&z.transform - &Matrix::eye(3)).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn zca_whiten_lands_in_unit_interval() {
        let out = zca_whiten(&gaussian(50, 4, 1), DEFAULT_ZCA_EPS).unwrap();
        assert!(out.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(Zca::fit(&gaussian(5, 2, 1), 0.0).is_err());
    }

    #[test]
    fn pipeline_replays_train_statistics() {
        let train = gaussian(100, 3, 1);
        let test = gaussian(40, 3, 2);
        let steps = [Step::Standardize, Step::Zca { eps: 1e-5 }];
        let p = Pipeline::fit(&train, &steps).unwrap();
        let out_train = p.apply(&train).unwrap();
        let out_test = p.apply(&test).unwrap();
        // recompute the chain by hand on the training rows only
        let s = Standardizer::fit(&train).unwrap();
        let st = s.apply(&train).unwrap();
        let z = Zca::fit(&st, 1e-5).unwrap();
        let u = UnitInterval::fit(&z.apply(&st).unwrap()).unwrap();
        let expect = u.apply(&z.apply(&s.apply(&test).unwrap()).unwrap()).unwrap();
        assert_eq!(out_test, expect);
        assert!(out_train.iter().chain(out_test.iter()).all(|v| (0.0..=1.0).contains(v)));
    }
}
