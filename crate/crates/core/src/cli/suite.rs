//! The invariant suite behind `rnnmla validate`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cluster_sim::{fixed_point_q, simulate_cluster, simulate_cluster_with, SimConfig};
use crate::data::{gen_synth_blobs, MultiChannelDataset};
use crate::format::{decode_matrix, encode_matrix};
use crate::model::{
    decode_model, encode_model, fit_mcrnn_mla, fit_mcrnn_mla1, fit_variant, forward_dataset, TrainConfig,
    Variant,
};
use crate::nucleus::{cluster_residual, zeta, zeta_activation, ClusterParams};
use crate::numerics::{fista_nn_l1, penrose_residuals, pinv, FistaConfig, Matrix, PINV_TOL};

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

type Outcome = std::result::Result<String, String>;

fn run(name: &'static str, f: impl FnOnce() -> Outcome) -> Check {
    let start = Instant::now();
    let out = f();
    let seconds = start.elapsed().as_secs_f64();
    let (passed, detail) = match out {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    Check {
        name,
        passed,
        detail,
        seconds,
    }
}

fn random_params(rng: &mut ChaCha8Rng) -> ClusterParams {
    let lambda = if rng.random_bool(0.5) { 0.005 } else { 0.01 };
    ClusterParams::with_lambda(
        rng.random_range(3..=500),
        rng.random_range(0.0..=0.9),
        10f64.powf(rng.random_range(-4.0..=0.0)),
        lambda,
    )
    .expect("drawn parameters are valid")
}

fn root_property() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let c = random_params(&mut rng);
        let x = rng.random_range(0.0..=10.0);
        let q = zeta(&c, x).map_err(|e| e.to_string())?;
        if !(0.0..=1.0).contains(&q) {
            return Err(format!("zeta = {q} outside [0, 1]"));
        }
        let rel = cluster_residual(&c, x, q).abs() / (1.0 + c.lambda_plus() * c.n() as f64);
        worst = worst.max(rel);
    }
    if worst <= 1e-8 {
        Ok(format!("10000 draws, worst scaled residual {worst:.1e}"))
    } else {
        Err(format!("scaled residual {worst:.3e} > 1e-8"))
    }
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < 200 {
        let c = random_params(&mut rng);
        let x = rng.random_range(0.0..=10.0);
        let a = zeta_activation(&c, x).map_err(|e| e.to_string())?;
        if a.saturated {
            continue;
        }
        let fp = fixed_point_q(&c, x, 1e-13, 1_000_000).map_err(|e| e.to_string())?;
        worst = worst.max((fp - a.q).abs());
        done += 1;
    }
    let c = ClusterParams::with_lambda(25, 0.0, 0.3, 0.01).expect("valid");
    let x = 0.7;
    let closed = c.lambda_plus() * 25.0 / (25.0 * c.lambda_minus() + 25.0 * x + c.r());
    let p0 = (zeta(&c, x).map_err(|e| e.to_string())? - closed).abs();
    if worst <= 1e-8 && p0 <= 1e-12 {
        Ok(format!("fixed point gap {worst:.1e}, p = 0 gap {p0:.1e}"))
    } else {
        Err(format!("fixed point gap {worst:.3e}, p = 0 gap {p0:.3e}"))
    }
}

fn monte_carlo() -> Outcome {
    let c = ClusterParams::with_lambda(100, 0.1, 0.001, 0.01).expect("valid");
    let mut notes = Vec::new();
    let mut ok = true;
    for (i, x) in [0.0, 0.25, 0.5].into_iter().enumerate() {
        let z = zeta(&c, x).map_err(|e| e.to_string())?;
        let s = simulate_cluster(&c, x, 1e6, 100 + i as u64).map_err(|e| e.to_string())?;
        let tol = (3.0 * s.std_err).max(0.02);
        ok &= (s.q_hat - z).abs() <= tol && s.counts.is_balanced();
        notes.push(format!("x={x}: zeta {z:.4} q_hat {:.4}±{:.4}", s.q_hat, s.std_err));
    }
    let detail = notes.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn simulation_conservation() -> Outcome {
    let c = ClusterParams::with_lambda(8, 0.5, 0.2, 0.3).expect("valid");
    let cfg = SimConfig::default();
    for seed in 0..5 {
        let s = simulate_cluster_with(&c, 0.1, 200.0, seed, &cfg).map_err(|e| e.to_string())?;
        if !s.counts.is_balanced() {
            return Err(format!("seed {seed}: unbalanced counts {:?}", s.counts));
        }
    }
    Ok("5 runs balanced".into())
}

fn fista_checks() -> Outcome {
    let tight = FistaConfig {
        max_iter: 5000,
        rel_tol: 1e-15,
        ..FistaConfig::default()
    };
    let one = Matrix::from_elem((1, 1), 1.0);
    let w = fista_nn_l1(&one, &one, &tight).map_err(|e| e.to_string())?.weights[[0, 0]];
    let w0 = fista_nn_l1(&one, &Matrix::from_elem((1, 1), -2.0), &tight)
        .map_err(|e| e.to_string())?
        .weights[[0, 0]];
    if (w - 0.5).abs() > 1e-6 || w0.abs() > 1e-6 {
        return Err(format!("closed forms: got {w} and {w0}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for k in 0..20 {
        let a = Matrix::from_shape_fn((30, 8), |_| rng.random_range(-1.0..1.0));
        let t = Matrix::from_shape_fn((30, 3), |_| rng.random_range(-1.0..1.0));
        let r = fista_nn_l1(&a, &t, &FistaConfig::default()).map_err(|e| e.to_string())?;
        if r.weights.iter().any(|v| *v < 0.0) {
            return Err(format!("problem {k}: negative weight"));
        }
        if r.trace.windows(2).any(|p| p[1] > p[0]) {
            return Err(format!("problem {k}: best objective increased"));
        }
    }
    Ok("closed forms, non-negativity and monotone trace on 20 problems".into())
}

fn penrose() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let (r, c) = (rng.random_range(1..12), rng.random_range(1..12));
        let m = if k % 3 == 0 {
            let rank = rng.random_range(1..=r.min(c));
            let u = Matrix::from_shape_fn((r, rank), |_| rng.random_range(-1.0..1.0));
            let v = Matrix::from_shape_fn((rank, c), |_| rng.random_range(-1.0..1.0));
            u.dot(&v)
        } else {
            Matrix::from_shape_fn((r, c), |_| rng.random_range(-1.0..1.0))
        };
        let g = pinv(&m, PINV_TOL).map_err(|e| e.to_string())?;
        let norm = crate::numerics::frobenius(&m).max(1.0);
        worst = worst.max(penrose_residuals(&m, &g).max() / norm);
    }
    if worst <= 1e-8 {
        Ok(format!("50 matrices, worst scaled residual {worst:.1e}"))
    } else {
        Err(format!("scaled residual {worst:.3e} > 1e-8"))
    }
}

fn small_config() -> TrainConfig {
    TrainConfig {
        widths: vec![12, 10],
        branches: 1,
        ..TrainConfig::default()
    }
}

fn bits(m: &Matrix) -> Vec<u64> {
    m.iter().map(|v| v.to_bits()).collect()
}

fn reduction_chain() -> Outcome {
    let err = |e: crate::Error| e.to_string();
    let data = gen_synth_blobs(90, 2, 3, 5, 4.0, 6).map_err(err)?;
    let cfg = small_config();
    let a = forward_dataset(&fit_mcrnn_mla1(&data, &cfg).map_err(err)?, &data).map_err(err)?;
    let b = forward_dataset(&fit_mcrnn_mla(&data, &cfg).map_err(err)?, &data).map_err(err)?;
    if bits(&a) != bits(&b) {
        return Err("MCRNN-MLA1 with one branch differs from MCRNN-MLA".into());
    }
    let single = MultiChannelDataset::single(data.channels()[0].clone(), data.labels().clone()).map_err(err)?;
    let c = forward_dataset(&fit_mcrnn_mla(&single, &cfg).map_err(err)?, &single).map_err(err)?;
    let d = forward_dataset(&fit_variant(Variant::RnnMla, &single, &cfg).map_err(err)?, &single).map_err(err)?;
    if bits(&c) != bits(&d) {
        return Err("single-channel MCRNN-MLA differs from RNN-MLA".into());
    }
    Ok("bit-identical scores".into())
}

fn persistence() -> Outcome {
    let err = |e: crate::Error| e.to_string();
    let data = gen_synth_blobs(60, 2, 2, 4, 4.0, 8).map_err(err)?;
    let cfg = TrainConfig {
        branches: 2,
        ..small_config()
    };
    let first = encode_model(&fit_variant(Variant::McRnnMla1, &data, &cfg).map_err(err)?);
    let second = encode_model(&fit_variant(Variant::McRnnMla1, &data, &cfg).map_err(err)?);
    if first != second {
        return Err("refit with the same seed changed the model file".into());
    }
    let model = decode_model(&first).map_err(err)?;
    if encode_model(&model) != first {
        return Err("decode/encode changed the bytes".into());
    }
    let m = Matrix::from_shape_fn((3, 4), |(i, j)| (i as f64 - j as f64) / 7.0);
    if bits(&decode_matrix(&encode_matrix(&m)).map_err(err)?) != bits(&m) {
        return Err("matrix container changed values".into());
    }
    Ok(format!("crc32 {:08x}", crc32fast::hash(&first)))
}

/// Run every check in order.
pub fn run_suite() -> Vec<Check> {
    vec![
        run("zeta root property", root_property),
        run("fixed point equals zeta", oracle_equivalence),
        run("simulation counts conserved", simulation_conservation),
        run("monte carlo agrees with zeta", monte_carlo),
        run("fista closed forms and monotonicity", fista_checks),
        run("penrose conditions", penrose),
        run("reduction chain", reduction_chain),
        run("determinism and persistence", persistence),
    ]
}
