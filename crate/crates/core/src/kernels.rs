//! Multinomial and composed multinomial kernels.
//!
//! The multinomial kernel of degree `l` is `MK_l(x, y) = sum_{j=0..l} (x.y)^j`,
//! the inner product of feature maps that list every coordinate tuple of
//! length at most `l`. The composed kernel with degree vector `(l_1, .., l_t)`
//! applies the same construction recursively to the previous level's feature
//! map, so it only depends on `x.y`:
//! `s_0 = x.y`, `s_i = sum_{j=0..l_i} s_{i-1}^j`.
//!
//! With `include_constant = false` every level sums from `j = 1` instead.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;

/// Default cap on explicit feature-map length.
pub const FEATURE_MAP_CAP: usize = 1_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("degree vector must be nonempty with every degree >= 1")]
    InvalidDegrees,
    #[error("total degree overflows")]
    DegreeOverflow,
    #[error("kernel value overflowed to a non-finite number")]
    Range,
    #[error("explicit feature map would have {len} entries, cap is {cap}")]
    CapExceeded { len: u128, cap: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub degree_vector: Vec<u32>,
    #[serde(default = "default_true")]
    pub include_constant: bool,
}

fn default_true() -> bool {
    true
}

impl KernelSpec {
    pub fn new(degree_vector: Vec<u32>) -> Result<Self, KernelError> {
        let spec = Self { degree_vector, include_constant: true };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        if self.degree_vector.is_empty() || self.degree_vector.contains(&0) {
            return Err(KernelError::InvalidDegrees);
        }
        self.total_degree().map(|_| ())
    }

    /// Number of levels `t`.
    pub fn depth(&self) -> usize {
        self.degree_vector.len()
    }

    /// `prod l_i`, the polynomial degree of the kernel in each argument.
    pub fn total_degree(&self) -> Result<u64, KernelError> {
        self.degree_vector.iter().try_fold(1u64, |acc, &l| acc.checked_mul(l as u64)).ok_or(KernelError::DegreeOverflow)
    }

    /// Kernel value as a function of the inner product `s = x.y`.
    pub fn eval_inner(&self, s: f64) -> f64 {
        self.degree_vector.iter().fold(s, |s, &l| level(s, l, self.include_constant))
    }

    /// Exact `sup |K(x, y)|` over `|x|, |y| <= r`: the recursion at `s = r^2`.
    pub fn sup_on_ball(&self, r: f64) -> f64 {
        self.eval_inner(r * r)
    }

    /// The closed-form envelope `max{1, (2r)^(2^t prod l_i)}`.
    pub fn sup_bound(&self, r: f64) -> f64 {
        let exp = 2f64.powi(self.depth() as i32) * self.total_degree().map(|d| d as f64).unwrap_or(f64::INFINITY);
        (2.0 * r).powf(exp).max(1.0)
    }
}

/// One multinomial level by Horner: `sum_{j=j0..l} s^j`.
fn level(s: f64, l: u32, include_constant: bool) -> f64 {
    let mut acc = 1.0;
    for _ in 0..l {
        acc = acc * s + 1.0;
    }
    if include_constant {
        acc
    } else {
        acc - 1.0
    }
}

fn dot(x: &[f64], y: &[f64]) -> Result<f64, KernelError> {
    if x.len() != y.len() {
        return Err(KernelError::DimensionMismatch(x.len(), y.len()));
    }
    Ok(x.iter().zip(y).map(|(a, b)| a * b).sum())
}

pub fn mk_eval(x: &[f64], y: &[f64], ell: u32, include_constant: bool) -> Result<f64, KernelError> {
    if ell == 0 {
        return Err(KernelError::InvalidDegrees);
    }
    let v = level(dot(x, y)?, ell, include_constant);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(KernelError::Range)
    }
}

pub fn cmk_eval(x: &[f64], y: &[f64], spec: &KernelSpec) -> Result<f64, KernelError> {
    let v = spec.eval_inner(dot(x, y)?);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(KernelError::Range)
    }
}

/// The multinomial feature map: entry for tuple `(i_1, .., i_j)` is
/// `prod x_{i_k}`, tuples listed by length then lexicographically.
pub fn explicit_feature_map(x: &[f64], ell: u32, include_constant: bool, cap: usize) -> Result<Vec<f64>, KernelError> {
    let d = x.len() as u128;
    let start = if include_constant { 0 } else { 1 };
    let len: u128 = (start..=ell).map(|j| d.saturating_pow(j)).fold(0u128, |a, b| a.saturating_add(b));
    if len > cap as u128 {
        return Err(KernelError::CapExceeded { len, cap });
    }
    let mut out = Vec::with_capacity(len as usize);
    let mut layer = vec![1.0];
    if include_constant {
        out.push(1.0);
    }
    for _ in 0..ell {
        layer = layer.iter().flat_map(|p| x.iter().map(move |xi| p * xi)).collect();
        out.extend_from_slice(&layer);
    }
    Ok(out)
}

/// Kernel matrix over a set of anchor points.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    pub points: Vec<Vec<f64>>,
    pub values: DMatrix<f64>,
}

impl GramMatrix {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Smallest eigenvalue relative to the spectral norm, or 0 when `K = 0`.
    pub fn min_eigen_rel(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let eig = linalg::sym_eigen(&self.values);
        let norm = eig.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if norm == 0.0 {
            0.0
        } else {
            eig.values[eig.values.len() - 1] / norm
        }
    }
}

fn check_dims(points: &[Vec<f64>]) -> Result<(), KernelError> {
    if let Some(first) = points.first() {
        if let Some(bad) = points.iter().find(|p| p.len() != first.len()) {
            return Err(KernelError::DimensionMismatch(first.len(), bad.len()));
        }
    }
    Ok(())
}

/// Builds the Gram matrix, evaluating each unordered pair once and mirroring.
pub fn gram_matrix(points: &[Vec<f64>], spec: &KernelSpec) -> Result<GramMatrix, KernelError> {
    spec.validate()?;
    check_dims(points)?;
    let n = points.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| cmk_eval(&points[i], &points[j], spec)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<_, _>>()?;
    let mut values = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (off, v) in row.iter().enumerate() {
            values[(i, i + off)] = *v;
            values[(i + off, i)] = *v;
        }
    }
    Ok(GramMatrix { points: points.to_vec(), values })
}

/// Cross-kernel matrix with entry `(i, j) = K(xs_i, anchors_j)`.
pub fn kernel_features<'a, I>(xs: I, anchors: &[Vec<f64>], spec: &KernelSpec) -> Result<DMatrix<f64>, KernelError>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let xs: Vec<&[f64]> = xs.into_iter().collect();
    let rows: Vec<Vec<f64>> = xs
        .par_iter()
        .map(|x| anchors.iter().map(|z| cmk_eval(x, z, spec)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<_, _>>()?;
    let k = anchors.len();
    Ok(DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j]))
}
