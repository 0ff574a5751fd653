use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{normalize_unit_interval, one_hot, MultiChannelDataset};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Gaussian class clusters, one independent set of class means per channel.
///
/// Every class mean sits at distance `separation / √2` from the origin, on
/// distinct coordinate axes when `classes ≤ dim` (rotated per channel), so
/// any two class means are `separation` unit standard deviations apart.
/// With more classes than dimensions the directions are random. Rows cycle
/// through the classes; each channel is finally mapped onto `[0, 1]`.
pub fn gen_synth_blobs(
    rows: usize,
    channels: usize,
    classes: usize,
    dim: usize,
    separation: f64,
    seed: u64,
) -> Result<MultiChannelDataset> {
    if rows == 0 || channels == 0 || classes == 0 || dim == 0 {
        return Err(Error::param("gen_synth_blobs", "all counts must be at least 1"));
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(Error::param("separation", format!("{separation} must be >= 0")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = separation / std::f64::consts::SQRT_2;
    let ids: Vec<usize> = (0..rows).map(|i| i % classes).collect();

    let mut mats = Vec::with_capacity(channels);
    for c in 0..channels {
        let means: Vec<Vec<f64>> = (0..classes)
            .map(|k| {
                if classes <= dim {
                    let mut m = vec![0.0; dim];
                    m[(k + c) % dim] = radius;
                    m
                } else {
                    let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                    v.into_iter().map(|a| a * radius / norm).collect()
                }
            })
            .collect();
        let raw = Matrix::from_shape_fn((rows, dim), |(i, j)| {
            let noise: f64 = StandardNormal.sample(&mut rng);
            means[ids[i]][j] + noise
        });
        mats.push(normalize_unit_interval(&raw)?);
    }
    let names = (0..channels).map(|c| format!("ch{c}")).collect();
    MultiChannelDataset::new(
        mats,
        one_hot(&ids, classes)?,
        names,
        format!("synthetic blobs N={rows} C={channels} K={classes} D={dim} sep={separation} seed={seed}"),
    )
}
