use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// A multi-index `alpha` in `N^d`, the exponent vector of `x^alpha`.
pub type MultiIndex = Vec<u32>;

/// All `alpha` in `N^d` with `|alpha|_1 <= max_degree`, in graded
/// lexicographic order: by total degree, then lexicographically with the
/// first coordinate most significant (descending), e.g. `x1` before `x2`.
pub fn multi_indices(d: usize, max_degree: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for deg in 0..=max_degree {
        let mut cur = vec![0u32; d];
        push_degree(&mut out, &mut cur, 0, deg);
    }
    out
}

fn push_degree(out: &mut Vec<MultiIndex>, cur: &mut MultiIndex, pos: usize, left: u32) {
    if cur.is_empty() {
        if left == 0 {
            out.push(Vec::new());
        }
        return;
    }
    if pos == cur.len() - 1 {
        cur[pos] = left;
        out.push(cur.clone());
        cur[pos] = 0;
        return;
    }
    for v in (0..=left).rev() {
        cur[pos] = v;
        push_degree(out, cur, pos + 1, left - v);
    }
    cur[pos] = 0;
}

/// `C(d + deg, deg)`, saturating.
pub fn multi_index_count(d: usize, deg: u32) -> u128 {
    let mut acc: u128 = 1;
    for i in 1..=deg as u128 {
        acc = acc.saturating_mul(d as u128 + i) / i;
    }
    acc
}

/// Evaluates `x^alpha` for every index, sharing a table of coordinate powers.
pub fn monomials(x: &[f64], indices: &[MultiIndex], max_degree: u32) -> Vec<f64> {
    let powers: Vec<Vec<f64>> = x
        .iter()
        .map(|&xi| {
            let mut p = Vec::with_capacity(max_degree as usize + 1);
            let mut acc = 1.0;
            for _ in 0..=max_degree {
                p.push(acc);
                acc *= xi;
            }
            p
        })
        .collect();
    indices.iter().map(|a| a.iter().zip(&powers).map(|(&e, p)| p[e as usize]).product()).collect()
}

pub fn monomial(x: &[f64], alpha: &[u32]) -> f64 {
    x.iter().zip(alpha).map(|(v, &e)| v.powi(e as i32)).product()
}

/// A polynomial in `dim` variables stored as a sparse multi-index map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "PolyRepr", into = "PolyRepr")]
pub struct DensePolynomial {
    dim: usize,
    coeffs: BTreeMap<MultiIndex, f64>,
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    dim: usize,
    terms: Vec<(MultiIndex, f64)>,
}

impl From<PolyRepr> for DensePolynomial {
    fn from(r: PolyRepr) -> Self {
        let mut p = DensePolynomial::zero(r.dim);
        for (a, c) in r.terms {
            p.add_term(a, c);
        }
        p
    }
}

impl From<DensePolynomial> for PolyRepr {
    fn from(p: DensePolynomial) -> Self {
        PolyRepr { dim: p.dim, terms: p.coeffs.into_iter().collect() }
    }
}

impl DensePolynomial {
    pub fn zero(dim: usize) -> Self {
        Self { dim, coeffs: BTreeMap::new() }
    }

    /// Univariate polynomial `sum_j c_j x^j`.
    pub fn univariate(coeffs: &[f64]) -> Self {
        let mut p = Self::zero(1);
        for (j, &c) in coeffs.iter().enumerate() {
            p.add_term(vec![j as u32], c);
        }
        p
    }

    /// Builds `sum_i coeffs_i x^{indices_i}`.
    pub fn from_indexed(dim: usize, indices: &[MultiIndex], coeffs: &[f64]) -> Self {
        let mut p = Self::zero(dim);
        for (a, &c) in indices.iter().zip(coeffs) {
            p.add_term(a.clone(), c);
        }
        p
    }

    /// Adds `c x^alpha`. Panics if `alpha` has the wrong length.
    pub fn add_term(&mut self, alpha: MultiIndex, c: f64) {
        assert_eq!(alpha.len(), self.dim, "multi-index length must equal the polynomial dimension");
        *self.coeffs.entry(alpha).or_insert(0.0) += c;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Largest `|alpha|_1` among stored terms (0 for the zero polynomial).
    pub fn degree(&self) -> u32 {
        self.coeffs.keys().map(|a| a.iter().sum::<u32>()).max().unwrap_or(0)
    }

    pub fn coeff(&self, alpha: &[u32]) -> f64 {
        self.coeffs.get(alpha).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.coeffs.iter().map(|(a, c)| (a, *c))
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        self.coeffs.iter().map(|(a, c)| c * monomial(x, a)).sum()
    }

    /// `(sum |c|, sum c^2)` over stored coefficients.
    pub fn coeff_bounds(&self) -> (f64, f64) {
        self.coeffs.values().fold((0.0, 0.0), |(l1, l2), c| (l1 + c.abs(), l2 + c * c))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { dim: self.dim, coeffs: self.coeffs.iter().map(|(a, c)| (a.clone(), c * s)).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (a, c) in &other.coeffs {
            out.add_term(a.clone(), *c);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut out = Self::zero(self.dim);
        for (a, ca) in &self.coeffs {
            for (b, cb) in &other.coeffs {
                let ab = a.iter().zip(b).map(|(x, y)| x + y).collect();
                out.add_term(ab, ca * cb);
            }
        }
        out
    }

    /// The linear form `w . x`.
    pub fn linear(w: &[f64]) -> Self {
        let mut p = Self::zero(w.len());
        for (i, &wi) in w.iter().enumerate() {
            let mut a = vec![0; w.len()];
            a[i] = 1;
            p.add_term(a, wi);
        }
        p
    }

    /// Substitutes a polynomial in `dim` variables into this univariate one.
    pub fn compose_univariate(&self, inner: &Self) -> Self {
        assert_eq!(self.dim, 1);
        let deg = self.degree();
        let mut out = Self::zero(inner.dim);
        let mut power = Self::zero(inner.dim);
        power.add_term(vec![0; inner.dim], 1.0);
        for j in 0..=deg {
            let c = self.coeff(&[j]);
            if c != 0.0 {
                out = out.add(&power.scale(c));
            }
            if j < deg {
                power = power.mul(inner);
            }
        }
        out
    }
}
