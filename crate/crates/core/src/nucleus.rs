//! Closed-form activation functions of dense nuclei.
//!
//! A nucleus is a cluster of `n` statistically identical spiking cells. Its
//! steady-state excitation probability `q` depends on the external
//! excitatory and inhibitory Poisson rates and, for clusters with
//! soma-to-soma cascades, on the inhibitory input `x` arriving from the
//! previous layer. [`zeta`] is the activation used by every hidden layer.

use ndarray::Zip;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Below this leading coefficient the cluster quadratic is solved as a
/// linear equation.
pub const DEGENERATE_LEADING: f64 = 1e-14;

/// Relative slack allowed for a negative discriminant before it is an error.
pub const DISCRIMINANT_SLACK: f64 = 1e-12;

/// Constants of a homogeneous nucleus plus the two derived coefficients of
/// its activation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawClusterParams", into = "RawClusterParams")]
pub struct ClusterParams {
    n: u32,
    p: f64,
    r: f64,
    lambda_plus: f64,
    lambda_minus: f64,
    c: f64,
    d: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawClusterParams {
    n: u32,
    p: f64,
    r: f64,
    lambda_plus: f64,
    lambda_minus: f64,
}

impl TryFrom<RawClusterParams> for ClusterParams {
    type Error = Error;

    fn try_from(raw: RawClusterParams) -> Result<Self> {
        ClusterParams::new(raw.n, raw.p, raw.r, raw.lambda_plus, raw.lambda_minus)
    }
}

impl From<ClusterParams> for RawClusterParams {
    fn from(c: ClusterParams) -> Self {
        RawClusterParams {
            n: c.n,
            p: c.p,
            r: c.r,
            lambda_plus: c.lambda_plus,
            lambda_minus: c.lambda_minus,
        }
    }
}

fn check_rate(name: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::param(name, format!("{v} is not finite")));
    }
    if v < 0.0 {
        return Err(Error::param(name, format!("{v} is negative")));
    }
    Ok(())
}

impl ClusterParams {
    pub fn new(n: u32, p: f64, r: f64, lambda_plus: f64, lambda_minus: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::param("n", format!("{n} cells, need at least 3")));
        }
        if !(0.0..1.0).contains(&p) {
            return Err(Error::param("p", format!("{p} outside [0, 1)")));
        }
        check_rate("r", r)?;
        if r == 0.0 {
            return Err(Error::param("r", "firing rate must be positive"));
        }
        check_rate("lambda_plus", lambda_plus)?;
        check_rate("lambda_minus", lambda_minus)?;
        let (c, d) = derived(n, p, r, lambda_plus, lambda_minus);
        Ok(ClusterParams {
            n,
            p,
            r,
            lambda_plus,
            lambda_minus,
            c,
            d,
        })
    }

    /// Symmetric external rates, `λ⁺ = λ⁻ = lambda`.
    pub fn with_lambda(n: u32, p: f64, r: f64, lambda: f64) -> Result<Self> {
        Self::new(n, p, r, lambda, lambda)
    }

    pub fn n(&self) -> u32 {
        self.n
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn lambda_plus(&self) -> f64 {
        self.lambda_plus
    }
    pub fn lambda_minus(&self) -> f64 {
        self.lambda_minus
    }
    /// Linear coefficient of the activation quadratic at `x = 0`.
    pub fn c(&self) -> f64 {
        self.c
    }
    /// Constant term `n·λ⁺`.
    pub fn d(&self) -> f64 {
        self.d
    }

    /// Leading coefficient `p(n−1)(λ⁻+x)` of the cluster quadratic.
    pub fn leading(&self, x: f64) -> f64 {
        self.p * (self.n as f64 - 1.0) * (self.lambda_minus + x)
    }
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams::with_lambda(10, 0.1, 0.001, 0.01).expect("default cluster is valid")
    }
}

fn derived(n: u32, p: f64, r: f64, lp: f64, lm: f64) -> (f64, f64) {
    let n = n as f64;
    let c = lp * p + r * p - lm * n - r - lp * p * n - n * p * r;
    (c, n * lp)
}

/// A probability after clamping into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Activation {
    pub q: f64,
    /// The unclamped value was above 1.
    pub saturated: bool,
}

impl Activation {
    fn clamp(raw: f64) -> Self {
        Activation {
            q: raw.clamp(0.0, 1.0),
            saturated: raw > 1.0,
        }
    }
}

/// Excitation probability of a nucleus of purely inhibitory cells.
///
/// Solves `q²r + q(r+λ⁻) − λ⁺ = 0` for its non-negative root, evaluated in
/// the cancellation-free form `2λ⁺ / (√((r+λ⁻)² + 4rλ⁺) + (r+λ⁻))`.
pub fn zeta_inhibitory(lambda_plus: f64, lambda_minus: f64, r: f64) -> Result<Activation> {
    check_rate("lambda_plus", lambda_plus)?;
    check_rate("lambda_minus", lambda_minus)?;
    check_rate("r", r)?;
    if r == 0.0 {
        return Err(Error::param("r", "firing rate must be positive"));
    }
    let s = r + lambda_minus;
    let root = (s * s + 4.0 * r * lambda_plus).sqrt();
    let raw = if lambda_plus == 0.0 {
        0.0
    } else {
        2.0 * lambda_plus / (root + s)
    };
    Ok(Activation::clamp(raw))
}

/// The simplest soma-to-soma pattern, which collapses to `λ⁺/(r+λ⁻)`.
pub fn zeta_simple(lambda_plus: f64, lambda_minus: f64, r: f64) -> Result<Activation> {
    for (name, v) in [("lambda_plus", lambda_plus), ("lambda_minus", lambda_minus), ("r", r)] {
        if !v.is_finite() {
            return Err(Error::param(name, format!("{v} is not finite")));
        }
    }
    let denom = r + lambda_minus;
    if denom <= 0.0 {
        return Err(Error::DegenerateDenominator(format!(
            "r + lambda_minus = {denom}"
        )));
    }
    Ok(Activation::clamp(lambda_plus / denom))
}

/// Cluster activation for inhibitory input `x`: the smaller root of the
/// soma-to-soma balance quadratic, clamped to `[0, 1]`.
pub fn zeta_activation(params: &ClusterParams, x: f64) -> Result<Activation> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::param("x", format!("{x} must be finite and non-negative")));
    }
    let d = params.d;
    if d == 0.0 {
        return Ok(Activation::clamp(0.0));
    }
    let a = params.leading(x);
    let b = params.c - params.n as f64 * x;
    if a < DEGENERATE_LEADING {
        let linear = -b;
        if linear <= 0.0 {
            return Err(Error::DegenerateRoot { linear });
        }
        return Ok(Activation::clamp(d / linear));
    }
    let mut disc = b * b - 4.0 * a * d;
    if disc < 0.0 {
        let scale = b * b + (4.0 * a * d).abs();
        if disc < -DISCRIMINANT_SLACK * scale {
            return Err(Error::NoRealRoot { discriminant: disc });
        }
        disc = 0.0;
    }
    let sq = disc.sqrt();
    // product of roots is d/a, so the smaller root is 2d/(-b + sqrt(disc))
    let raw = if b < 0.0 {
        2.0 * d / (sq - b)
    } else {
        (-b - sq) / (2.0 * a)
    };
    Ok(Activation::clamp(raw))
}

/// [`zeta_activation`] without the saturation flag.
pub fn zeta(params: &ClusterParams, x: f64) -> Result<f64> {
    zeta_activation(params, x).map(|a| a.q)
}

/// Elementwise [`zeta`].
pub fn zeta_map(params: &ClusterParams, x: &Matrix) -> Result<Matrix> {
    if let Some(((row, col), &value)) = x
        .indexed_iter()
        .find(|(_, v)| !v.is_finite() || **v < 0.0)
    {
        return Err(Error::InvalidInput { row, col, value });
    }
    let mut out = Matrix::zeros(x.raw_dim());
    let mut err = None;
    Zip::from(&mut out).and(x).for_each(|o, &v| {
        if err.is_some() {
            return;
        }
        match zeta(params, v) {
            Ok(q) => *o = q,
            Err(e) => err = Some(e),
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Left-hand side of the cluster balance polynomial, evaluated term by term.
pub fn cluster_residual(params: &ClusterParams, x: f64, q: f64) -> f64 {
    let n = params.n as f64;
    let (p, r, lp, lm) = (params.p, params.r, params.lambda_plus, params.lambda_minus);
    q * q * p * (n - 1.0) * (lm + x) + q * (n - 1.0) * (r * (1.0 - p) - lp * p)
        - q * n * (r + lm + x)
        + lp * n
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn example() -> ClusterParams {
        ClusterParams::with_lambda(10, 0.1, 0.001, 0.01).unwrap()
    }

    #[test]
    fn rejects_bad_params() {
        assert!(ClusterParams::new(2, 0.1, 1.0, 0.0, 0.0).is_err());
        assert!(ClusterParams::new(3, 1.0, 1.0, 0.0, 0.0).is_err());
        assert!(ClusterParams::new(3, 0.1, 0.0, 0.0, 0.0).is_err());
        assert!(ClusterParams::new(3, 0.1, 1.0, -1.0, 0.0).is_err());
        assert!(ClusterParams::new(3, 0.1, 1.0, 0.0, f64::NAN).is_err());
    }

    #[test]
    fn derived_constants_recompute() {
        let c = ClusterParams::new(37, 0.42, 0.3, 0.007, 0.002).unwrap();
        let (n, p, r, lp, lm) = (37.0, 0.42, 0.3, 0.007, 0.002);
        let cc = lp * p + r * p - lm * n - r - lp * p * n - n * p * r;
        assert!(((c.c() - cc) / cc).abs() < 1e-12);
        assert!(((c.d() - n * lp) / (n * lp)).abs() < 1e-12);
    }

    #[test]
    fn serde_recomputes_derived() {
        let c = example();
        let s = toml::to_string(&c).unwrap();
        let back: ClusterParams = toml::from_str(&s).unwrap();
        assert_eq!(c, back);
        assert!(toml::from_str::<ClusterParams>("n = 2\np = 0.1\nr = 1.0\nlambda_plus = 0.0\nlambda_minus = 0.0").is_err());
    }

    #[test]
    fn inhibitory_examples() {
        assert_eq!(zeta_inhibitory(0.0, 0.3, 1.0).unwrap().q, 0.0);
        let a = zeta_inhibitory(0.75, 0.0, 1.0).unwrap();
        assert!((a.q - 0.5).abs() < 1e-15);
        assert!(zeta_inhibitory(-1.0, 0.0, 1.0).is_err());
        assert!(zeta_inhibitory(1.0, f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn inhibitory_residual_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let log_uniform = |rng: &mut ChaCha8Rng| 10f64.powf(rng.random_range(-4.0..2.0));
        for _ in 0..1000 {
            let (lp, lm, r) = (log_uniform(&mut rng), log_uniform(&mut rng), log_uniform(&mut rng));
            let a = zeta_inhibitory(lp, lm, r).unwrap();
            assert!((0.0..=1.0).contains(&a.q));
            if !a.saturated {
                let q = a.q;
                let res = q * q * r + q * (r + lm) - lp;
                assert!(res.abs() < 1e-10 * lp.max(1.0), "residual {res}");
            }
        }
    }

    #[test]
    fn simple_examples() {
        assert_eq!(zeta_simple(1.0, 1.0, 1.0).unwrap(), Activation { q: 0.5, saturated: false });
        assert_eq!(zeta_simple(0.0, 0.0, 2.0).unwrap().q, 0.0);
        assert_eq!(zeta_simple(5.0, 0.0, 1.0).unwrap(), Activation { q: 1.0, saturated: true });
        assert!(matches!(
            zeta_simple(1.0, 0.0, 0.0),
            Err(Error::DegenerateDenominator(_))
        ));
    }

    #[test]
    fn zero_excitation_gives_zero() {
        let c = ClusterParams::new(25, 0.5, 0.2, 0.0, 0.01).unwrap();
        for x in [0.0, 0.3, 7.0] {
            assert_eq!(zeta(&c, x).unwrap(), 0.0);
        }
    }

    #[test]
    fn p_zero_closed_form() {
        let c = ClusterParams::new(10, 0.0, 1.0, 0.01, 0.0).unwrap();
        assert!((zeta(&c, 0.0).unwrap() - 0.1).abs() < 1e-12 * 0.1);
        let c = ClusterParams::new(40, 0.0, 0.3, 0.005, 0.005).unwrap();
        for x in [0.0, 0.1, 2.0] {
            let closed = 0.005 * 40.0 / (40.0 * 0.005 + 40.0 * x + 0.3);
            assert!(((zeta(&c, x).unwrap() - closed) / closed).abs() < 1e-12);
        }
    }

    #[test]
    fn worked_example_root() {
        // reference root from an independent quadratic-formula evaluation
        let c = example();
        let q = zeta(&c, 0.5).unwrap();
        assert!((q - 0.019_600_528_075_620_5).abs() < 1e-14, "{q}");
        assert!(cluster_residual(&c, 0.5, q).abs() < 1e-12);
    }

    #[test]
    fn residual_constant_term() {
        let c = example();
        assert_eq!(cluster_residual(&c, 0.5, 0.0), c.d());
    }

    #[test]
    fn residual_matches_cleared_balance_equation() {
        // balance equation q = (λ⁺ + rq(n-1)(1-p)/s) / (r+λ⁻+x + rqp(n-1)/s),
        // s = n - qp(n-1); multiply through by s and move everything right.
        let c = example();
        let (n, p, r, lp, lm) = (10.0, 0.1, 0.001, 0.01, 0.01);
        let (x, q) = (0.5, 0.5);
        let s = n - q * p * (n - 1.0);
        let lhs = q * ((r + lm + x) * s + r * q * p * (n - 1.0));
        let rhs = lp * s + r * q * (n - 1.0) * (1.0 - p);
        let expanded = rhs - lhs;
        let res = cluster_residual(&c, x, q);
        assert!((res - expanded).abs() < 1e-14, "{res} vs {expanded}");
        // 0.11475 - 0.00045 - 2.555 + 0.1
        assert!((res - (-2.3407)).abs() < 1e-12, "{res}");
    }

    #[test]
    fn map_matches_scalar() {
        let c = example();
        let m = array![[0.5]];
        let out = zeta_map(&c, &m).unwrap();
        assert_eq!(out[[0, 0]], zeta(&c, 0.5).unwrap());

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Matrix::from_shape_fn((20, 30), |_| rng.random_range(0.0..2.0));
        let out = zeta_map(&c, &x).unwrap();
        assert_eq!(out.dim(), (20, 30));
        for ((i, j), v) in out.indexed_iter() {
            assert_eq!(*v, zeta(&c, x[[i, j]]).unwrap());
        }

        let dead = ClusterParams::new(10, 0.1, 0.001, 0.0, 0.01).unwrap();
        assert_eq!(zeta_map(&dead, &Matrix::zeros((3, 4))).unwrap(), Matrix::zeros((3, 4)));
    }

    #[test]
    fn map_reports_bad_entry() {
        let c = example();
        let x = array![[0.1, 0.2], [0.3, -1.0]];
        match zeta_map(&c, &x) {
            Err(Error::InvalidInput { row: 1, col: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn branch_continuity_at_threshold() {
        // tune p so the leading coefficient sits exactly on the threshold
        let n = 10;
        let x = 0.0;
        let lm = 0.01;
        let p_edge = DEGENERATE_LEADING / ((n as f64 - 1.0) * lm);
        let below = ClusterParams::new(n, p_edge * (1.0 - 1e-9), 0.5, 0.01, lm).unwrap();
        let above = ClusterParams::new(n, p_edge * (1.0 + 1e-9), 0.5, 0.01, lm).unwrap();
        assert!(below.leading(x) < DEGENERATE_LEADING);
        assert!(above.leading(x) >= DEGENERATE_LEADING);
        let qa = zeta(&above, x).unwrap();
        let qb = zeta(&below, x).unwrap();
        assert!((qa - qb).abs() < 1e-12, "{qa} vs {qb}");
    }

    #[test]
    fn monotone_in_x() {
        for &lambda in &[0.005, 0.01] {
            for &n in &[3u32, 10, 50, 200, 500] {
                for &p in &[0.0, 0.3, 0.6, 0.9] {
                    for &r in &[1e-4, 1e-2, 1.0] {
                        let c = ClusterParams::with_lambda(n, p, r, lambda).unwrap();
                        let mut prev = f64::INFINITY;
                        for k in 0..=200 {
                            let q = zeta(&c, k as f64 * 0.05).unwrap();
                            assert!(q <= prev + 1e-15, "n={n} p={p} r={r} x={}", k as f64 * 0.05);
                            prev = q;
                        }
                    }
                }
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn root_property(
            n in 3u32..=500,
            p in 0.0f64..0.9,
            log_r in -4.0f64..0.0,
            lambda_hi in proptest::bool::ANY,
            x in 0.0f64..10.0,
        ) {
            let lambda = if lambda_hi { 0.01 } else { 0.005 };
            let c = ClusterParams::with_lambda(n, p, 10f64.powf(log_r), lambda).unwrap();
            let a = zeta_activation(&c, x).unwrap();
            proptest::prop_assert!((0.0..=1.0).contains(&a.q));
            if !a.saturated && c.leading(x) >= DEGENERATE_LEADING {
                let res = cluster_residual(&c, x, a.q);
                proptest::prop_assert!(res.abs() <= 1e-8 * (1.0 + c.d()));
            }
        }
    }
}
