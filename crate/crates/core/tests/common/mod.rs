//! Independent reference computations shared by the integration tests.
//!
//! Everything here is written from the definitions, without calling the
//! library routine being checked.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tds_core::rng::stream_rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    stream_rng(seed, 0xC0FFEE)
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, d: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(lo..hi)).collect()
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect()
}

/// Uniform point in the radius-`r` ball by rejection from the cube.
pub fn ball_point_by_rejection(rng: &mut ChaCha8Rng, d: usize, r: f64) -> Vec<f64> {
    loop {
        let x = uniform_vec(rng, d, -1.0, 1.0);
        if x.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
            return x.into_iter().map(|v| v * r).collect();
        }
    }
}

/// Feature vector of the multinomial kernel: one entry per coordinate tuple
/// of length `0..=ell` (length 0 only with the constant), enumerated by
/// recursive extension.
pub fn feature_map_oracle(x: &[f64], ell: u32, include_constant: bool) -> Vec<f64> {
    let mut out = Vec::new();
    let mut level = vec![1.0];
    if include_constant {
        out.push(1.0);
    }
    for _ in 0..ell {
        let mut next = Vec::with_capacity(level.len() * x.len());
        for v in &level {
            for xi in x {
                next.push(v * xi);
            }
        }
        out.extend_from_slice(&next);
        level = next;
    }
    out
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Largest generalized eigenvalue of `(phi_prime, phi)` for `phi` positive
/// definite, via the Cholesky factor: `lambda_max(L^-1 phi' L^-T)`.
pub fn generalized_rho_cholesky(phi: &DMatrix<f64>, phi_prime: &DMatrix<f64>) -> f64 {
    let l = phi.clone().cholesky().expect("positive definite").l();
    let linv = l.try_inverse().expect("invertible factor");
    let m = &linv * phi_prime * linv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    m.symmetric_eigenvalues().max()
}

/// `min ||y - K a||^2` over `a(lambda) = (K + lambda I)^-1 y` with
/// `a^T K a <= b`, by a log-spaced grid over `lambda` refined three times
/// around the best feasible grid point. The grid stays above `1e-5`: below
/// that the null-space part of `a` swamps `a^T K a` in rounding error.
pub fn lambda_grid_oracle(k: &DMatrix<f64>, y: &[f64], b: f64) -> f64 {
    let n = k.nrows();
    let yv = DVector::from_column_slice(y);
    let eval = |lam: f64| -> Option<f64> {
        let m = k + DMatrix::identity(n, n) * lam;
        let a = m.lu().solve(&yv)?;
        let ka = k * &a;
        if a.dot(&ka) <= b * (1.0 + 1e-12) {
            Some((&yv - ka).norm_squared())
        } else {
            None
        }
    };
    let (mut lo, mut hi) = (-5.0f64, 8.0f64);
    let mut best = f64::INFINITY;
    for _ in 0..4 {
        let steps = 2000;
        let mut best_e = hi;
        for i in 0..=steps {
            let e = lo + (hi - lo) * i as f64 / steps as f64;
            if let Some(v) = eval(10f64.powf(e)) {
                if v < best {
                    best = v;
                    best_e = e;
                }
            }
        }
        let h = (hi - lo) / steps as f64;
        lo = best_e - 2.0 * h;
        hi = best_e + 2.0 * h;
    }
    best
}

/// `min ||y - X w||^2` over the Euclidean ball `||w||^2 <= b` by
/// accelerated projected gradient with adaptive restart.
pub fn ball_constrained_least_squares(x: &DMatrix<f64>, y: &[f64], b: f64, iters: usize) -> f64 {
    let yv = DVector::from_column_slice(y);
    let g = x.tr_mul(x);
    let xty = x.tr_mul(&yv);
    let lip = 2.0 * g.symmetric_eigenvalues().max();
    let radius = b.sqrt();
    let project = |w: DVector<f64>| {
        let n = w.norm();
        if n > radius {
            w * (radius / n)
        } else {
            w
        }
    };
    let obj = |w: &DVector<f64>| (&yv - x * w).norm_squared();
    let mut w = DVector::zeros(x.ncols());
    let mut z = w.clone();
    let mut t = 1.0f64;
    let mut prev = obj(&w);
    for _ in 0..iters {
        let grad = (&g * &z - &xty) * 2.0;
        let next = project(&z - grad / lip);
        let now = obj(&next);
        if now > prev {
            t = 1.0;
            z = w.clone();
            continue;
        }
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        z = &next + (&next - &w) * ((t - 1.0) / t_next);
        w = next;
        t = t_next;
        prev = now;
    }
    obj(&w)
}

/// Ordinary least squares through the normal equations.
pub fn ols(x: &DMatrix<f64>, y: &[f64]) -> DVector<f64> {
    let yv = DVector::from_column_slice(y);
    x.tr_mul(x).cholesky().expect("full column rank").solve(&x.tr_mul(&yv))
}

/// `E[Z^p]` for a standard normal by the trapezoid rule on `[-14, 14]`.
pub fn gaussian_moment_quadrature(p: u32) -> f64 {
    let h = 1e-3;
    let n = 14_000;
    let s: f64 = (-n..=n)
        .map(|i| {
            let z = i as f64 * h;
            z.powi(p as i32) * (-0.5 * z * z).exp()
        })
        .sum();
    s * h / (2.0 * std::f64::consts::PI).sqrt()
}

/// `E[x^alpha]` under a product of standard normals.
pub fn gaussian_product_moment(alpha: &[u32]) -> f64 {
    alpha.iter().map(|&p| gaussian_moment_quadrature(p)).product()
}

/// Binomial coefficient as f64.
pub fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Two-sided one-sample Kolmogorov-Smirnov statistic against a CDF.
pub fn ks_statistic(mut samples: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Mean and standard error of a sample.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Least-squares slope of `y` on `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
