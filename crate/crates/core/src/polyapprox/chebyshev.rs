use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{DensePolynomial, PolyApproxError};

/// Largest degree for which monomial coefficients are exported.
pub const MONOMIAL_DEGREE_CAP: u32 = 64;

/// A polynomial on `[-radius, radius]` stored in the Chebyshev basis of `x / radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevApprox {
    pub radius: f64,
    /// `c_k` in `sum_k c_k T_k(x / radius)`.
    pub coeffs: Vec<f64>,
}

fn sample<F: Fn(f64) -> f64>(f: &F, radius: f64, n: usize) -> Result<Vec<f64>, PolyApproxError> {
    (0..n)
        .map(|j| {
            let x = radius * (PI * (j as f64 + 0.5) / n as f64).cos();
            let v = f(x);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(PolyApproxError::NonFinite { x })
            }
        })
        .collect()
}

/// Discrete Chebyshev transform of values at `n` Chebyshev-Gauss nodes,
/// returning the first `keep` coefficients.
fn transform(values: &[f64], keep: usize) -> Vec<f64> {
    let n = values.len();
    (0..keep)
        .map(|k| {
            let s = neumaier_sum(
                values.iter().enumerate().map(|(j, v)| v * (PI * k as f64 * (j as f64 + 0.5) / n as f64).cos()),
            );
            let c = 2.0 * s / n as f64;
            if k == 0 {
                c / 2.0
            } else {
                c
            }
        })
        .collect()
}

impl ChebyshevApprox {
    /// Interpolant of `f` at `degree + 1` Chebyshev-Gauss nodes.
    pub fn interpolate<F: Fn(f64) -> f64>(f: F, radius: f64, degree: u32) -> Result<Self, PolyApproxError> {
        check_radius(radius)?;
        let n = degree as usize + 1;
        let values = sample(&f, radius, n)?;
        Ok(Self { radius, coeffs: transform(&values, n) })
    }

    /// Truncation to `degree` of a Chebyshev series computed on `n_nodes`
    /// nodes (at least `degree + 1`). With many nodes this approaches the
    /// truncated Chebyshev expansion of `f`.
    pub fn truncated<F: Fn(f64) -> f64>(
        f: F,
        radius: f64,
        degree: u32,
        n_nodes: usize,
    ) -> Result<Self, PolyApproxError> {
        check_radius(radius)?;
        let n = n_nodes.max(degree as usize + 1);
        let values = sample(&f, radius, n)?;
        Ok(Self { radius, coeffs: transform(&values, degree as usize + 1) })
    }

    pub fn degree(&self) -> u32 {
        self.coeffs.len().saturating_sub(1) as u32
    }

    /// Clenshaw evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        let t = x / self.radius;
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + self.coeffs.first().copied().unwrap_or(0.0)
    }

    /// Monomial coefficients of the approximant in `x`.
    pub fn to_monomial(&self) -> Result<DensePolynomial, PolyApproxError> {
        let deg = self.degree();
        if deg > MONOMIAL_DEGREE_CAP {
            return Err(PolyApproxError::DegreeCap { degree: deg, cap: MONOMIAL_DEGREE_CAP });
        }
        let table = chebyshev_monomial_table(deg as usize);
        let coeffs: Vec<f64> = (0..=deg as usize)
            .map(|j| {
                let s = neumaier_sum(self.coeffs.iter().enumerate().skip(j).map(|(k, c)| c * table[k][j] as f64));
                s / self.radius.powi(j as i32)
            })
            .collect();
        Ok(DensePolynomial::univariate(&coeffs))
    }
}

fn check_radius(radius: f64) -> Result<(), PolyApproxError> {
    if radius.is_finite() && radius > 0.0 {
        Ok(())
    } else {
        Err(PolyApproxError::InvalidRadius(radius))
    }
}

/// Exact monomial coefficients of `T_0..T_n`.
fn chebyshev_monomial_table(n: usize) -> Vec<Vec<i128>> {
    let mut t: Vec<Vec<i128>> = vec![vec![0; n + 1]; n + 1];
    t[0][0] = 1;
    if n >= 1 {
        t[1][1] = 1;
    }
    for k in 2..=n {
        for j in 0..=n {
            let shifted = if j > 0 { 2 * t[k - 1][j - 1] } else { 0 };
            t[k][j] = shifted - t[k - 2][j];
        }
    }
    t
}

/// Compensated (Neumaier) summation.
pub(crate) fn neumaier_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Interpolant of `f` on `[-radius, radius]` in the monomial basis.
pub fn chebyshev_approx_univariate<F: Fn(f64) -> f64>(
    f: F,
    radius: f64,
    degree: u32,
) -> Result<DensePolynomial, PolyApproxError> {
    ChebyshevApprox::interpolate(f, radius, degree)?.to_monomial()
}
