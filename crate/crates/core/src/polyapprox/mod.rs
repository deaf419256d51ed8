//! Uniform polynomial approximation.
//!
//! Univariate approximants are built by Chebyshev interpolation and certified
//! by measuring their sup error; sigmoid networks are approximated layer by
//! layer. Also provides coefficient sums and the growth envelope of an
//! approximant outside its approximation ball.

mod chebyshev;
mod compose;
mod envelope;
mod polynomial;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nets::NetError;
use crate::rng::stream_rng;
use crate::scenarios::sample_uniform_ball;

pub use chebyshev::{chebyshev_approx_univariate, ChebyshevApprox, MONOMIAL_DEGREE_CAP};
pub use compose::{compose_sigmoid_net_approx, ComposedApprox};
pub use envelope::{out_of_radius_bound, EnvelopeCheck, OutOfRadiusEnvelope};
pub use polynomial::{monomial, monomials, multi_index_count, multi_indices, DensePolynomial, MultiIndex};

/// Equispaced points in the univariate sup-error grid.
pub const SUP_GRID_POINTS: usize = 10_000;
/// Chebyshev nodes added to the univariate grid.
pub const SUP_CHEB_NODES: usize = 1_000;
/// Monte-Carlo samples for multivariate sup-error estimates.
pub const SUP_BALL_SAMPLES: usize = 10_000;

#[derive(Debug, Error, PartialEq)]
pub enum PolyApproxError {
    #[error("function is not finite at x = {x}")]
    NonFinite { x: f64 },
    #[error("target accuracy not reached at any degree up to {0}")]
    NotReachable(u32),
    #[error("monomial export requested at degree {degree}, cap is {cap}")]
    DegreeCap { degree: u32, cap: u32 },
    #[error("radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("target accuracy must be positive, got {0}")]
    InvalidTarget(f64),
    #[error("composition needs a sigmoid network of depth at least 2")]
    UnsupportedNet,
    #[error("measured sup error {measured:.3e} exceeds target {target:.3e}")]
    CertificateFailed { measured: f64, target: f64 },
    #[error(transparent)]
    Net(#[from] NetError),
}

/// Largest observed `|p - f|` and where it occurred.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupError {
    pub value: f64,
    pub argmax: Vec<f64>,
    pub n_points: usize,
}

/// Points of the univariate sup-error grid on `[-r, r]`.
pub fn sup_grid(r: f64, n_points: usize) -> impl Iterator<Item = f64> {
    let n = n_points.max(2);
    let equi = (0..n).map(move |i| -r + 2.0 * r * i as f64 / (n - 1) as f64);
    let nodes =
        (0..SUP_CHEB_NODES).map(move |j| r * (std::f64::consts::PI * (j as f64 + 0.5) / SUP_CHEB_NODES as f64).cos());
    equi.chain(nodes)
}

/// Max `|p - f|` over `n_points` equispaced points plus [`SUP_CHEB_NODES`]
/// Chebyshev nodes of `[-r, r]`.
pub fn grid_sup_error<P, F>(p: P, f: F, r: f64, n_points: usize) -> SupError
where
    P: Fn(f64) -> f64,
    F: Fn(f64) -> f64,
{
    let mut best = SupError { value: 0.0, argmax: vec![0.0], n_points: 0 };
    for x in sup_grid(r, n_points) {
        let e = (p(x) - f(x)).abs();
        best.n_points += 1;
        if e > best.value || e.is_nan() {
            best.value = if e.is_nan() { f64::INFINITY } else { e };
            best.argmax = vec![x];
        }
    }
    best
}

/// Max `|p - f|` over `n_samples` uniform points of the radius-`r` ball in
/// `R^dim`. A Monte-Carlo lower estimate of the true sup.
pub fn ball_sup_error<P, F>(p: P, f: F, dim: usize, r: f64, n_samples: usize, seed: u64) -> SupError
where
    P: Fn(&[f64]) -> f64,
    F: Fn(&[f64]) -> f64,
{
    let mut rng = stream_rng(seed, 0);
    let pts = sample_uniform_ball(n_samples, dim, r, &mut rng);
    let mut best = SupError { value: 0.0, argmax: vec![0.0; dim], n_points: pts.len() };
    for x in pts {
        let e = (p(&x) - f(&x)).abs();
        if e > best.value || e.is_nan() {
            best.value = if e.is_nan() { f64::INFINITY } else { e };
            best.argmax = x;
        }
    }
    best
}

/// Grid sup error of the degree-`degree` Chebyshev interpolant of `f`.
pub fn interpolant_error<F: Fn(f64) -> f64>(
    f: &F,
    r: f64,
    degree: u32,
) -> Result<(ChebyshevApprox, f64), PolyApproxError> {
    let a = ChebyshevApprox::interpolate(f, r, degree)?;
    let e = grid_sup_error(|x| a.eval(x), f, r, SUP_GRID_POINTS).value;
    Ok((a, e))
}

/// Smallest tested degree whose interpolant meets `eps` on the grid:
/// doubles from 1 until success, then bisects between the last failure and
/// the first success.
pub fn degree_for_target<F: Fn(f64) -> f64>(f: F, r: f64, eps: f64, max_degree: u32) -> Result<u32, PolyApproxError> {
    if !(eps > 0.0) {
        return Err(PolyApproxError::InvalidTarget(eps));
    }
    let ok = |d: u32| interpolant_error(&f, r, d).map(|(_, e)| e <= eps);
    let mut lo = 0u32;
    let mut hi = 1u32;
    loop {
        if hi > max_degree {
            if lo < max_degree && ok(max_degree)? {
                hi = max_degree;
                break;
            }
            return Err(PolyApproxError::NotReachable(max_degree));
        }
        if ok(hi)? {
            break;
        }
        lo = hi;
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Evidence that a polynomial uniformly approximates a target on a ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxCertificate {
    pub radius: f64,
    pub target_eps: f64,
    pub measured_sup_error: f64,
    /// `"grid"` (univariate) or `"ball-monte-carlo"`.
    pub measurement: String,
    pub n_points: usize,
    pub degree: u64,
    /// Coefficient sums; absent when the monomial expansion is too large to form.
    pub coeff_l1: Option<f64>,
    pub coeff_l2_sq: Option<f64>,
    /// Reference degree from the asymptotic scaling law, when one applies.
    pub reference_degree: Option<f64>,
    /// `degree / reference_degree`: the constant this implementation attains.
    pub implementation_constant: Option<f64>,
}

/// Builds the certificate of a univariate Chebyshev approximant of `f`.
pub fn certify_univariate<F: Fn(f64) -> f64>(a: &ChebyshevApprox, f: F, eps: f64) -> ApproxCertificate {
    let sup = grid_sup_error(|x| a.eval(x), &f, a.radius, SUP_GRID_POINTS);
    let (l1, l2) = match a.to_monomial() {
        Ok(p) => {
            let (l1, l2) = p.coeff_bounds();
            (Some(l1), Some(l2))
        }
        Err(_) => (None, None),
    };
    let reference = (a.radius.max(1.0) * (a.radius.max(1.0) / eps).ln()).max(f64::MIN_POSITIVE);
    ApproxCertificate {
        radius: a.radius,
        target_eps: eps,
        measured_sup_error: sup.value,
        measurement: "grid".into(),
        n_points: sup.n_points,
        degree: a.degree() as u64,
        coeff_l1: l1,
        coeff_l2_sq: l2,
        reference_degree: Some(reference),
        implementation_constant: Some(a.degree() as f64 / reference),
    }
}
