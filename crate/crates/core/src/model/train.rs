use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{EncoderLayer, EncoderStack, ModelArtifact, TrainConfig, Variant};
use crate::data::{argmax_rows, concat_columns, MultiChannelDataset, DEFAULT_CHANNEL};
use crate::error::{Error, Result};
use crate::nucleus::{zeta_map, ClusterParams};
use crate::numerics::{
    adj, check_non_negative, fista_nn_l1, frobenius, pinv, FistaConfig, Matrix, PINV_TOL,
};
use crate::seed::{derive, Role};

fn uniform_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_shape_fn((rows, cols), |_| rng.random::<f64>())
}

fn max_entry(m: &Matrix) -> f64 {
    m.iter().copied().fold(0.0, f64::max)
}

/// Fit one encoder layer of width `width` on non-negative inputs `x`.
///
/// A random non-negative projection `W̄` gives reconstruction features
/// `A = adj(ζ(X·W̄))`; the non-negative sparse problem `X ≈ A·W` is solved
/// for `W` (`H × D`) and its transpose becomes the encoder. The encoder is
/// then divided by the largest activation it produces and by 10.
pub fn fit_encoder_layer(
    x: &Matrix,
    width: usize,
    cluster: &ClusterParams,
    fista: &FistaConfig,
    seed: u64,
) -> Result<EncoderLayer> {
    if width == 0 {
        return Err(Error::param("width", "must be at least 1"));
    }
    check_non_negative(x)?;
    let projection = uniform_matrix(x.ncols(), width, seed);
    let features = adj(&zeta_map(cluster, &x.dot(&projection))?)?;
    let solved = fista_nn_l1(&features, x, fista)?;
    let reconstruction_error = frobenius(&(x - &features.dot(&solved.weights)));

    let encoder = solved.weights.t().to_owned();
    let activation_max = max_entry(&zeta_map(cluster, &x.dot(&encoder))?);
    if activation_max == 0.0 {
        return Err(Error::DeadLayer { layer: 1 });
    }
    let weights = encoder / activation_max / 10.0;
    Ok(EncoderLayer {
        weights,
        cluster: *cluster,
        activation_max,
        reconstruction_error,
        fista_iterations: solved.iterations,
        fista_converged: solved.converged,
    })
}

/// Cluster activations `ζ(X·E)` of one layer.
pub fn encode(layer: &EncoderLayer, x: &Matrix) -> Result<Matrix> {
    if x.ncols() != layer.input_width() {
        return Err(Error::DimensionMismatch(format!(
            "layer takes {} inputs, got {}",
            layer.input_width(),
            x.ncols()
        )));
    }
    check_non_negative(x)?;
    zeta_map(&layer.cluster, &x.dot(&layer.weights))
}

struct Job<'a> {
    channel: usize,
    branch: usize,
    key: &'a str,
    input: &'a Matrix,
}

fn fit_stack(job: &Job<'_>, cfg: &TrainConfig) -> Result<(EncoderStack, Matrix)> {
    let mut x = job.input.clone();
    let mut layers = Vec::with_capacity(cfg.layers - 1);
    for (l, &width) in cfg.encoder_widths().iter().enumerate() {
        let layer_no = l + 1;
        let seed = derive(cfg.master_seed, job.key, layer_no, job.branch, Role::Encoder);
        let layer = fit_encoder_layer(&x, width, &cfg.cluster, &cfg.fista, seed).map_err(|e| match e {
            Error::DeadLayer { .. } => Error::DeadLayer { layer: layer_no },
            e => e,
        })?;
        x = encode(&layer, &x)?;
        layers.push(layer);
    }
    Ok((
        EncoderStack {
            channel: job.channel,
            branch: job.branch,
            layers,
        },
        x,
    ))
}

struct Inputs<'a> {
    names: Vec<String>,
    dims: Vec<usize>,
    keyed: Vec<(String, &'a Matrix)>,
}

fn fit_architecture(
    variant: Variant,
    inputs: Inputs<'_>,
    labels: &Matrix,
    cfg: &TrainConfig,
    branches: usize,
) -> Result<ModelArtifact> {
    cfg.validate()?;
    for (key, m) in &inputs.keyed {
        if m.nrows() != labels.nrows() {
            return Err(Error::Dataset(format!(
                "channel `{key}` has {} rows, labels have {}",
                m.nrows(),
                labels.nrows()
            )));
        }
    }
    check_labels(labels)?;

    let jobs: Vec<Job<'_>> = inputs
        .keyed
        .iter()
        .enumerate()
        .flat_map(|(c, (key, input))| {
            (0..branches).map(move |b| Job {
                channel: c,
                branch: b,
                key: key.as_str(),
                input,
            })
        })
        .collect();
    let fitted = jobs
        .par_iter()
        .map(|job| fit_stack(job, cfg))
        .collect::<Result<Vec<_>>>()?;
    let (stacks, encodings): (Vec<_>, Vec<_>) = fitted.into_iter().unzip();
    let features = concat_columns(&encodings);

    let (random_layer, hidden) = if variant.has_random_layer() {
        let seed = derive(cfg.master_seed, "", cfg.layers, 0, Role::RandomLayer);
        let w = uniform_matrix(features.ncols(), cfg.widths[cfg.layers - 1], seed);
        let hidden = zeta_map(&cfg.cluster, &features.dot(&w))?;
        (Some(w), hidden)
    } else {
        (None, features)
    };
    let output = pinv(&hidden, PINV_TOL)?.dot(labels);

    Ok(ModelArtifact {
        variant,
        cluster: cfg.cluster,
        channel_names: inputs.names,
        channel_dims: inputs.dims,
        branches,
        stacks,
        random_layer,
        output,
        label_count: labels.ncols(),
        provenance: String::new(),
    })
}

fn check_labels(y: &Matrix) -> Result<()> {
    if y.ncols() == 0 {
        return Err(Error::LabelFormat("no classes".into()));
    }
    for (i, row) in y.outer_iter().enumerate() {
        let ones = row.iter().filter(|v| **v == 1.0).count();
        let zeros = row.iter().filter(|v| **v == 0.0).count();
        if ones != 1 || ones + zeros != row.len() {
            return Err(Error::LabelFormat(format!("row {i} is not one-hot")));
        }
    }
    Ok(())
}

/// Single-channel RNN-MLA on `x` with one-hot labels `y`.
pub fn fit_rnn_mla(x: &Matrix, y: &Matrix, cfg: &TrainConfig) -> Result<ModelArtifact> {
    let inputs = Inputs {
        names: vec![DEFAULT_CHANNEL.to_string()],
        dims: vec![x.ncols()],
        keyed: vec![(DEFAULT_CHANNEL.to_string(), x)],
    };
    fit_architecture(Variant::RnnMla, inputs, y, cfg, 1)
}

fn per_channel(data: &MultiChannelDataset) -> Inputs<'_> {
    Inputs {
        names: data.channel_names().to_vec(),
        dims: data.channel_dims(),
        keyed: data
            .channel_names()
            .iter()
            .cloned()
            .zip(data.channels())
            .collect(),
    }
}

/// One encoder stack per channel, concatenated before the random layer.
pub fn fit_mcrnn_mla(data: &MultiChannelDataset, cfg: &TrainConfig) -> Result<ModelArtifact> {
    fit_architecture(Variant::McRnnMla, per_channel(data), data.labels(), cfg, 1)
}

/// `cfg.branches` independently seeded stacks per channel.
pub fn fit_mcrnn_mla1(data: &MultiChannelDataset, cfg: &TrainConfig) -> Result<ModelArtifact> {
    fit_architecture(Variant::McRnnMla1, per_channel(data), data.labels(), cfg, cfg.branches)
}

/// MCRNN-MLA1 without the random layer: the readout acts on the
/// concatenated encodings directly.
pub fn fit_mcrnn_mla2(data: &MultiChannelDataset, cfg: &TrainConfig) -> Result<ModelArtifact> {
    fit_architecture(Variant::McRnnMla2, per_channel(data), data.labels(), cfg, cfg.branches)
}

/// Dispatch on `variant`. RNN-MLA sees all channels concatenated.
pub fn fit_variant(variant: Variant, data: &MultiChannelDataset, cfg: &TrainConfig) -> Result<ModelArtifact> {
    match variant {
        Variant::RnnMla => {
            let x = data.concatenated();
            let key = data.channel_names().join("+");
            let inputs = Inputs {
                names: data.channel_names().to_vec(),
                dims: data.channel_dims(),
                keyed: vec![(key, &x)],
            };
            fit_architecture(Variant::RnnMla, inputs, data.labels(), cfg, 1)
        }
        Variant::McRnnMla => fit_mcrnn_mla(data, cfg),
        Variant::McRnnMla1 => fit_mcrnn_mla1(data, cfg),
        Variant::McRnnMla2 => fit_mcrnn_mla2(data, cfg),
    }
}

/// Class scores `ζ(F·W_L)·W_{L+1}` (or `F·W_{L+1}` without a random layer)
/// for per-channel inputs.
pub fn forward_scores(model: &ModelArtifact, channels: &[Matrix]) -> Result<Matrix> {
    if channels.len() != model.channel_dims.len() {
        return Err(Error::DimensionMismatch(format!(
            "model has {} channels, got {}",
            model.channel_dims.len(),
            channels.len()
        )));
    }
    let rows = channels[0].nrows();
    for (c, (m, &dim)) in channels.iter().zip(&model.channel_dims).enumerate() {
        if m.ncols() != dim || m.nrows() != rows {
            return Err(Error::DimensionMismatch(format!(
                "channel {c} is {}x{}, expected {rows}x{dim}",
                m.nrows(),
                m.ncols()
            )));
        }
        check_non_negative(m)?;
    }

    let joined;
    let inputs: Vec<&Matrix> = if model.variant == Variant::RnnMla {
        joined = concat_columns(channels);
        vec![&joined]
    } else {
        channels.iter().collect()
    };
    let encodings = model
        .stacks
        .iter()
        .map(|s| {
            let mut x = inputs[s.channel].clone();
            for layer in &s.layers {
                x = encode(layer, &x)?;
            }
            Ok(x)
        })
        .collect::<Result<Vec<_>>>()?;
    let features = concat_columns(&encodings);
    let hidden = match &model.random_layer {
        Some(w) => zeta_map(&model.cluster, &features.dot(w))?,
        None => features,
    };
    Ok(hidden.dot(&model.output))
}

pub fn forward_dataset(model: &ModelArtifact, data: &MultiChannelDataset) -> Result<Matrix> {
    forward_scores(model, data.channels())
}

/// Row-wise argmax of the scores; ties go to the lowest class index.
pub fn predict(model: &ModelArtifact, channels: &[Matrix]) -> Result<Vec<usize>> {
    Ok(argmax_rows(&forward_scores(model, channels)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_synth_blobs, one_hot};

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            layers: 2,
            widths: vec![15, 10],
            branches: 2,
            ..TrainConfig::default()
        }
    }

    fn random_input(rows: usize, cols: usize, seed: u64) -> Matrix {
        uniform_matrix(rows, cols, seed)
    }

    #[test]
    fn encoder_layer_shape_and_sign() {
        let x = random_input(60, 12, 1);
        let layer = fit_encoder_layer(&x, 7, &ClusterParams::default(), &FistaConfig::default(), 3).unwrap();
        assert_eq!(layer.weights.dim(), (12, 7));
        assert!(layer.weights.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn encoder_scaling_uses_recorded_max() {
        let x = random_input(40, 6, 2);
        let cluster = ClusterParams::default();
        let layer = fit_encoder_layer(&x, 5, &cluster, &FistaConfig::default(), 9).unwrap();
        let unscaled = &layer.weights * 10.0 * layer.activation_max;
        let m = max_entry(&zeta_map(&cluster, &x.dot(&unscaled)).unwrap());
        assert!((m - layer.activation_max).abs() <= 1e-12 * m);
    }

    #[test]
    fn dead_cluster_is_reported() {
        let x = random_input(10, 3, 0);
        let dead = ClusterParams::new(10, 0.1, 0.001, 0.0, 0.01).unwrap();
        assert!(matches!(
            fit_encoder_layer(&x, 2, &dead, &FistaConfig::default(), 0),
            Err(Error::DeadLayer { .. })
        ));
        let y = one_hot(&(0..10).map(|i| i % 2).collect::<Vec<_>>(), 2).unwrap();
        let cfg = TrainConfig { cluster: dead, ..small_cfg() };
        assert!(matches!(fit_rnn_mla(&x, &y, &cfg), Err(Error::DeadLayer { layer: 1 })));
    }

    #[test]
    fn duplicated_columns_get_duplicated_encoder_rows() {
        // the reconstruction problem separates by target column, so equal
        // columns of X must produce equal rows of the encoder
        let base = random_input(80, 5, 4);
        let dup = concat_columns(&[base.clone(), base]);
        let layer = fit_encoder_layer(&dup, 8, &ClusterParams::default(), &FistaConfig::default(), 1).unwrap();
        for j in 0..5 {
            for h in 0..8 {
                let (a, b) = (layer.weights[[j, h]], layer.weights[[j + 5, h]]);
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "row {j} col {h}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn encode_rows_are_independent() {
        let x = random_input(5, 4, 8);
        let layer = fit_encoder_layer(&x, 3, &ClusterParams::default(), &FistaConfig::default(), 2).unwrap();
        let doubled = concat_rows(&x, &x);
        let out = encode(&layer, &doubled).unwrap();
        assert_eq!(out.dim(), (10, 3));
        for i in 0..5 {
            assert_eq!(out.row(i), out.row(i + 5));
        }
        assert!(encode(&layer, &random_input(2, 5, 0)).is_err());
        let dead = EncoderLayer {
            cluster: ClusterParams::new(10, 0.1, 0.001, 0.0, 0.01).unwrap(),
            ..layer
        };
        assert_eq!(encode(&dead, &Matrix::zeros((2, 4))).unwrap(), Matrix::zeros((2, 3)));
    }

    fn concat_rows(a: &Matrix, b: &Matrix) -> Matrix {
        ndarray::concatenate(ndarray::Axis(0), &[a.view(), b.view()]).unwrap()
    }

    #[test]
    fn rnn_mla_shapes() {
        let x = random_input(100, 20, 3);
        let y = one_hot(&(0..100).map(|i| i % 3).collect::<Vec<_>>(), 3).unwrap();
        let m = fit_rnn_mla(&x, &y, &small_cfg()).unwrap();
        assert_eq!(m.stacks[0].layers[0].weights.dim(), (20, 15));
        assert_eq!(m.random_layer.as_ref().unwrap().dim(), (15, 10));
        assert_eq!(m.output.dim(), (10, 3));
        m.validate().unwrap();
    }

    #[test]
    fn rejects_bad_labels_and_config() {
        let x = random_input(6, 3, 3);
        let y = Matrix::ones((6, 2));
        assert!(matches!(fit_rnn_mla(&x, &y, &small_cfg()), Err(Error::LabelFormat(_))));
        let y = one_hot(&[0, 1, 0, 1, 0, 1], 2).unwrap();
        let cfg = TrainConfig { layers: 1, widths: vec![3], ..small_cfg() };
        assert!(fit_rnn_mla(&x, &y, &cfg).is_err());
    }

    #[test]
    fn variant_structure() {
        let data = gen_synth_blobs(60, 3, 2, 4, 4.0, 1).unwrap();
        let cfg = small_cfg();
        let m1 = fit_mcrnn_mla1(&data, &cfg).unwrap();
        assert_eq!(m1.stacks.len(), 6);
        assert_eq!(m1.feature_width(), 3 * 2 * 15);
        m1.validate().unwrap();
        let m2 = fit_mcrnn_mla2(&data, &cfg).unwrap();
        assert!(m2.random_layer.is_none());
        assert_eq!(m2.output.nrows(), m2.feature_width());
        m2.validate().unwrap();
        let m0 = fit_mcrnn_mla(&data, &cfg).unwrap();
        assert_eq!(m0.random_layer.as_ref().unwrap().nrows(), 3 * 15);
        let r = fit_variant(Variant::RnnMla, &data, &cfg).unwrap();
        assert_eq!(r.stacks[0].layers[0].input_width(), 12);
        assert_eq!(forward_dataset(&r, &data).unwrap().dim(), (60, 2));
    }

    #[test]
    fn forward_checks_inputs() {
        let data = gen_synth_blobs(30, 2, 2, 3, 4.0, 1).unwrap();
        let m = fit_mcrnn_mla(&data, &small_cfg()).unwrap();
        assert!(forward_scores(&m, &data.channels()[..1]).is_err());
        let mut neg = data.channels().to_vec();
        neg[1][[0, 0]] = -1.0;
        assert!(forward_scores(&m, &neg).is_err());
        let one: Vec<Matrix> = data.channels().iter().map(|c| c.slice(ndarray::s![0..1, ..]).to_owned()).collect();
        assert_eq!(forward_scores(&m, &one).unwrap().dim(), (1, 2));
    }
}
