use nalgebra::DMatrix;
use proptest::prelude::*;

use rnnmla::data::{concat_columns, gen_synth_blobs, MultiChannelDataset};
use rnnmla::model::{encode, fit_mcrnn_mla, fit_mcrnn_mla1, fit_mcrnn_mla2, forward_dataset, ModelArtifact, TrainConfig};
use rnnmla::nucleus::zeta_map;
use rnnmla::numerics::Matrix;

fn cfg() -> TrainConfig {
    TrainConfig {
        widths: vec![12, 9],
        branches: 2,
        ..TrainConfig::default()
    }
}

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]])
}

fn hidden(model: &ModelArtifact, data: &MultiChannelDataset) -> Matrix {
    let enc: Vec<Matrix> = model
        .stacks
        .iter()
        .map(|s| {
            s.layers
                .iter()
                .fold(data.channels()[s.channel].clone(), |x, l| encode(l, &x).unwrap())
        })
        .collect();
    let f = concat_columns(&enc);
    match &model.random_layer {
        Some(w) => zeta_map(&model.cluster, &f.dot(w)).unwrap(),
        None => f,
    }
}

/// Indices of a maximal set of linearly independent columns (greedy
/// modified Gram–Schmidt).
fn independent_columns(h: &DMatrix<f64>) -> Vec<usize> {
    let mut basis: Vec<nalgebra::DVector<f64>> = Vec::new();
    let mut keep = Vec::new();
    for j in 0..h.ncols() {
        let mut v = h.column(j).into_owned();
        let norm = v.norm();
        for b in &basis {
            let c = b.dot(&v);
            v -= b * c;
        }
        if v.norm() > 1e-9 * norm.max(1e-300) {
            basis.push(v.normalize());
            keep.push(j);
        }
    }
    keep
}

/// A basic least-squares solution through Householder QR on independent
/// columns, zero elsewhere. Independent of the SVD readout.
fn qr_basic_solution(h: &Matrix, y: &Matrix) -> DMatrix<f64> {
    let h = to_na(h);
    let keep = independent_columns(&h);
    let sub = h.select_columns(keep.iter());
    let qr = sub.qr();
    let qty = qr.q().transpose() * to_na(y);
    let part = qr.r().solve_upper_triangular(&qty).expect("independent columns");
    let mut w = DMatrix::zeros(h.ncols(), y.ncols());
    for (k, &j) in keep.iter().enumerate() {
        w.set_row(j, &part.row(k));
    }
    w
}

#[test]
fn readout_is_the_minimum_norm_least_squares_solution() {
    let data = gen_synth_blobs(300, 3, 3, 8, 3.0, 21).unwrap();
    for model in [fit_mcrnn_mla(&data, &cfg()).unwrap(), fit_mcrnn_mla2(&data, &cfg()).unwrap()] {
        let h = hidden(&model, &data);
        let hn = to_na(&h);
        let basic = qr_basic_solution(&h, data.labels());
        let got = to_na(&model.output);
        // fitted values of a least-squares problem are unique
        let (fit_got, fit_oracle) = (&hn * &got, &hn * &basic);
        let rel = (&fit_got - &fit_oracle).norm() / fit_oracle.norm();
        assert!(rel < 1e-8, "{:?}: fitted values differ by {rel:e}", model.variant);
        // and among all solutions the readout has the smallest norm
        assert!(got.norm() <= basic.norm() * (1.0 + 1e-10), "{:?}", model.variant);
        if independent_columns(&hn).len() == h.ncols() {
            assert!((&got - &basic).norm() <= 1e-8 * basic.norm());
        }
    }
}

#[test]
fn channel_encoders_do_not_depend_on_other_channels() {
    let data = gen_synth_blobs(120, 3, 2, 6, 3.0, 22).unwrap();
    let pair = data.select_channels(&[0, 2]).unwrap();
    let full = fit_mcrnn_mla1(&data, &cfg()).unwrap();
    let part = fit_mcrnn_mla1(&pair, &cfg()).unwrap();
    // stacks are channel-major: channel 2 of the full model is channel 1 of the pair
    let b = cfg().branches;
    assert_eq!(full.stacks[..b].iter().map(|s| &s.layers).collect::<Vec<_>>(), part.stacks[..b].iter().map(|s| &s.layers).collect::<Vec<_>>());
    assert_eq!(
        full.stacks[2 * b..].iter().map(|s| &s.layers).collect::<Vec<_>>(),
        part.stacks[b..].iter().map(|s| &s.layers).collect::<Vec<_>>()
    );
}

#[test]
fn branches_differ() {
    let data = gen_synth_blobs(80, 1, 2, 6, 3.0, 23).unwrap();
    let m = fit_mcrnn_mla1(&data, &cfg()).unwrap();
    assert_ne!(m.stacks[0].layers[0].weights, m.stacks[1].layers[0].weights);
}

#[test]
fn scoring_is_row_wise() {
    let data = gen_synth_blobs(90, 2, 3, 5, 3.0, 24).unwrap();
    let model = fit_mcrnn_mla(&data, &cfg()).unwrap();
    let scores = forward_dataset(&model, &data).unwrap();
    let perm: Vec<usize> = (0..90).rev().map(|i| (i * 7) % 90).collect();
    let shuffled = data.select_rows(&perm);
    let s2 = forward_dataset(&model, &shuffled).unwrap();
    for (k, &i) in perm.iter().enumerate() {
        for j in 0..3 {
            assert!((s2[[k, j]] - scores[[i, j]]).abs() <= 1e-12 * scores[[i, j]].abs().max(1.0));
        }
    }
}

#[test]
fn training_row_order_changes_little() {
    // FISTA and the readout sum over rows, so a permutation only moves rounding
    let data = gen_synth_blobs(150, 2, 3, 6, 5.0, 25).unwrap();
    let perm: Vec<usize> = (0..150).map(|i| (i * 11) % 150).collect();
    let a = fit_mcrnn_mla2(&data, &cfg()).unwrap();
    let b = fit_mcrnn_mla2(&data.select_rows(&perm), &cfg()).unwrap();
    for (sa, sb) in a.stacks.iter().zip(&b.stacks) {
        for (la, lb) in sa.layers.iter().zip(&sb.layers) {
            let gap = (&la.weights - &lb.weights).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let scale = la.weights.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(gap <= 1e-6 * scale, "encoder moved by {gap:e} (scale {scale:e})");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn forward_is_finite_and_shaped(seed in 0u64..1000, rows in 10usize..60, k in 2usize..4) {
        let data = gen_synth_blobs(rows, 2, k, 4, 2.0, seed).unwrap();
        let model = fit_mcrnn_mla(&data, &TrainConfig { widths: vec![6, 5], ..TrainConfig::default() }).unwrap();
        let s = forward_dataset(&model, &data).unwrap();
        prop_assert_eq!(s.dim(), (rows, k));
        prop_assert!(s.iter().all(|v| v.is_finite()));
        for stack in &model.stacks {
            for l in &stack.layers {
                prop_assert!(l.weights.iter().all(|w| *w >= 0.0));
            }
        }
    }
}
