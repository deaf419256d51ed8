//! Moment-matching TDS regression via uniform polynomial approximation.
//!
//! The tester compares every empirical test moment `E_{S'}[x^alpha]` with
//! `|alpha|_1 <= 2 max(ell, t)` against the training marginal's moment and
//! rejects on any deviation above `Delta`. On acceptance the learner fits a
//! degree-`ell` polynomial with coefficients in `[-B, B]` by projected
//! gradient and outputs it clipped to `[-M, M]`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{clip, Dataset};
use crate::linalg;
use crate::outcome::{Hypothesis, RejectReason, TdsOutcome};
use crate::params::{strict_size, ParamsError, ScaleMode, TdsParams};
use crate::polyapprox::{monomial, monomials, multi_index_count, multi_indices, DensePolynomial, MultiIndex};
use crate::rng::{phase, stream_rng};
use crate::scenarios::{MarginalKind, MarginalSpec};
use crate::source::{DataSource, SourceError};

#[derive(Debug, Error)]
pub enum TdsMomentError {
    #[error("dataset is empty")]
    Empty,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("no analytic moments for this marginal; use empirical reference moments")]
    UnsupportedMarginal,
    #[error("reference moments missing multi-index {0:?}")]
    MissingReference(MultiIndex),
    #[error("{count} monomial features exceed the cap {cap}")]
    FeatureCap { count: u128, cap: usize },
    #[error("labeled data required")]
    Unlabeled,
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Source(#[from] SourceError),
}

/// All multi-indices up to a total degree, in graded lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiIndexSet {
    pub dim: usize,
    pub max_total_degree: u32,
    pub indices: Vec<MultiIndex>,
}

impl MultiIndexSet {
    pub fn new(dim: usize, max_total_degree: u32) -> Self {
        Self { dim, max_total_degree, indices: multi_indices(dim, max_total_degree) }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// `E_S[x^alpha]`.
pub fn empirical_moment(data: &Dataset, alpha: &[u32]) -> Result<f64, TdsMomentError> {
    if data.is_empty() {
        return Err(TdsMomentError::Empty);
    }
    if alpha.len() != data.dim() {
        return Err(TdsMomentError::DimensionMismatch(alpha.len(), data.dim()));
    }
    Ok(data.points().map(|x| monomial(x, alpha)).sum::<f64>() / data.len() as f64)
}

const CHUNK: usize = 1024;

/// All moments of `set` at once. Chunks are summed in a fixed order, so the
/// result does not depend on the number of threads.
pub fn empirical_moments(data: &Dataset, set: &MultiIndexSet) -> Result<Vec<f64>, TdsMomentError> {
    if data.is_empty() {
        return Err(TdsMomentError::Empty);
    }
    if set.dim != data.dim() {
        return Err(TdsMomentError::DimensionMismatch(set.dim, data.dim()));
    }
    let samples = data.samples();
    let partial: Vec<Vec<f64>> = samples
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; set.len()];
            for s in chunk {
                for (a, m) in acc.iter_mut().zip(monomials(&s.x, &set.indices, set.max_total_degree)) {
                    *a += m;
                }
            }
            acc
        })
        .collect();
    let n = data.len() as f64;
    let mut out = vec![0.0; set.len()];
    for p in partial {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
    }
    Ok(out.into_iter().map(|v| v / n).collect())
}

/// Where reference moments come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ReferenceSource {
    Analytic,
    Empirical { n: usize },
}

/// Training-marginal moments for every index of a [`MultiIndexSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceMoments {
    pub set: MultiIndexSet,
    pub values: Vec<f64>,
    pub source: ReferenceSource,
}

impl ReferenceMoments {
    pub fn get(&self, alpha: &[u32]) -> Option<f64> {
        self.set.indices.iter().position(|a| a == alpha).map(|i| self.values[i])
    }
}

/// `E[(mu + s Z)^p]` for standard normal `Z`, by binomial expansion.
fn gaussian_moment(mu: f64, s: f64, p: u32) -> f64 {
    let mut total = 0.0;
    let mut binom = 1.0;
    for k in 0..=p {
        if k > 0 {
            binom = binom * (p - k + 1) as f64 / k as f64;
        }
        if k % 2 == 0 {
            total += binom * mu.powi((p - k) as i32) * s.powi(k as i32) * double_factorial_odd(k);
        }
    }
    total
}

/// `(k - 1)!!` for even `k` (1 for `k = 0`).
fn double_factorial_odd(k: u32) -> f64 {
    (1..k).step_by(2).map(|v| v as f64).product()
}

/// `E[x^p]` for `x ~ Uniform[-a, a]`.
fn uniform_moment(a: f64, p: u32) -> f64 {
    if p % 2 == 1 {
        0.0
    } else {
        a.powi(p as i32) / (p + 1) as f64
    }
}

/// Exact moments of a product marginal (Gaussian or uniform cube).
pub fn reference_moments(marginal: &MarginalSpec, max_total_degree: u32) -> Result<ReferenceMoments, TdsMomentError> {
    let set = MultiIndexSet::new(marginal.dim, max_total_degree);
    let coord: Box<dyn Fn(usize, u32) -> f64> = match &marginal.kind {
        MarginalKind::Gaussian { mean, scale } => {
            let (mean, scale) = (mean.clone(), scale.clone());
            Box::new(move |i, p| gaussian_moment(mean[i], scale[i], p))
        }
        MarginalKind::UniformCube { a } => {
            let a = *a;
            Box::new(move |_, p| uniform_moment(a, p))
        }
        _ => return Err(TdsMomentError::UnsupportedMarginal),
    };
    let values =
        set.indices.iter().map(|alpha| alpha.iter().enumerate().map(|(i, &p)| coord(i, p)).product()).collect();
    Ok(ReferenceMoments { set, values, source: ReferenceSource::Analytic })
}

/// Empirical moments of a held-out training sample.
pub fn empirical_reference_moments(
    held_out: &Dataset,
    max_total_degree: u32,
) -> Result<ReferenceMoments, TdsMomentError> {
    let set = MultiIndexSet::new(held_out.dim(), max_total_degree);
    let values = empirical_moments(held_out, &set)?;
    Ok(ReferenceMoments { set, values, source: ReferenceSource::Empirical { n: held_out.len() } })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub max_abs_deviation: f64,
    pub offending_alpha: MultiIndex,
    #[serde(rename = "Delta", with = "crate::serde_f64")]
    pub delta: f64,
    pub degree_checked: u32,
    pub n_moments: usize,
    pub passed: bool,
}

/// Checks `|E_S[x^alpha] - ref_alpha| <= delta` for every `|alpha|_1 <= max_total_degree`.
pub fn moment_test(
    test_data: &Dataset,
    reference: &ReferenceMoments,
    max_total_degree: u32,
    delta: f64,
) -> Result<MomentReport, TdsMomentError> {
    let set = MultiIndexSet::new(test_data.dim(), max_total_degree);
    let lookup: Vec<f64> = if reference.set.dim == set.dim && reference.set.max_total_degree >= max_total_degree {
        // Graded order makes the smaller set a prefix of the larger one.
        reference.values[..set.len()].to_vec()
    } else {
        set.indices
            .iter()
            .map(|a| reference.get(a).ok_or_else(|| TdsMomentError::MissingReference(a.clone())))
            .collect::<Result<_, _>>()?
    };
    let emp = empirical_moments(test_data, &set)?;
    let mut worst = 0.0f64;
    let mut arg = vec![0; set.dim];
    for ((alpha, e), r) in set.indices.iter().zip(&emp).zip(&lookup) {
        let dev = (e - r).abs();
        if dev > worst || dev.is_nan() {
            worst = if dev.is_nan() { f64::INFINITY } else { dev };
            arg = alpha.clone();
        }
    }
    Ok(MomentReport {
        max_abs_deviation: worst,
        offending_alpha: arg,
        delta,
        degree_checked: max_total_degree,
        n_moments: set.len(),
        passed: worst <= delta,
    })
}

/// Degree, coefficient and moment-tolerance budget of the moment pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformApproxParams {
    /// Approximation degree `ell`.
    pub ell: u32,
    /// Moment degree parameter `t`.
    pub t_mom: u32,
    /// Coefficient box `B`.
    pub b_coef: f64,
    /// Moment tolerance `Delta`.
    #[serde(rename = "Delta", with = "crate::serde_f64")]
    pub delta: f64,
    pub eps_prime: f64,
    /// Sup of the target on the approximation ball.
    pub r: f64,
    pub k: usize,
    #[serde(rename = "R")]
    pub radius: f64,
    /// Set when `Delta` underflowed to 0 in double precision.
    #[serde(default)]
    pub delta_underflow: bool,
}

impl UniformApproxParams {
    /// The theoretical parameter block: `eps' = eps/11`,
    /// `ell = ceil(R ln R g)`, `t = ceil(2 ln(2M/eps'))`,
    /// `B = r (2(k+ell))^(3 ell)`, `Delta = eps'^2 / (4 B^2 d^(2 ell t))`.
    /// `ell` is floored at 1 (the formula vanishes at `R = 1`).
    pub fn strict(epsilon: f64, label_bound: f64, r: f64, k: usize, radius: f64, dim: usize, g_f: f64) -> Self {
        let eps_prime = epsilon / 11.0;
        let ell = (radius * radius.ln() * g_f).ceil().max(1.0) as u32;
        let t_mom = (2.0 * (2.0 * label_bound / eps_prime).ln()).ceil().max(1.0) as u32;
        let l = ell as f64;
        let ln_b = r.ln() + 3.0 * l * (2.0 * (k as f64 + l)).ln();
        let ln_delta = 2.0 * eps_prime.ln() - 4f64.ln() - 2.0 * ln_b - 2.0 * l * t_mom as f64 * (dim as f64).ln();
        let delta = ln_delta.exp();
        Self { ell, t_mom, b_coef: ln_b.exp(), delta, eps_prime, r, k, radius, delta_underflow: delta == 0.0 }
    }

    /// Moments are checked up to this total degree.
    pub fn moment_degree(&self) -> u32 {
        2 * self.ell.max(self.t_mom)
    }

    pub fn validate(&self) -> Result<(), TdsMomentError> {
        if !(self.b_coef > 0.0) || self.delta.is_nan() || self.delta < 0.0 || !(self.eps_prime > 0.0) {
            return Err(TdsMomentError::Invalid("B, Delta and eps' must be positive".into()));
        }
        Ok(())
    }
}

/// Box-constrained least-squares fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolyFit {
    pub poly: DensePolynomial,
    /// `mean (y - p(x))^2`.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Default cap on the number of monomial features.
pub const FEATURE_CAP: usize = 20_000;
const MAX_ITERATIONS: usize = 100_000;
const WINDOW: usize = 50;

/// Minimizes `mean (y - p(x))^2` over degree-`ell` polynomials with every
/// coefficient in `[-b, b]`, by projected gradient with step `1/L` where
/// `L = 2 lambda_max(X^T X / n)`, from zero. Stops when the objective drops
/// by less than `eps_obj` over 50 iterations, or after 100000 iterations.
pub fn fit_constrained_poly_regression(s: &Dataset, ell: u32, b: f64, eps_obj: f64) -> Result<PolyFit, TdsMomentError> {
    fit_constrained_poly_regression_capped(s, ell, b, eps_obj, FEATURE_CAP)
}

pub fn fit_constrained_poly_regression_capped(
    s: &Dataset,
    ell: u32,
    b: f64,
    eps_obj: f64,
    cap: usize,
) -> Result<PolyFit, TdsMomentError> {
    let y = s.labels().ok_or(TdsMomentError::Unlabeled)?;
    if s.is_empty() {
        return Err(TdsMomentError::Empty);
    }
    if !(b >= 0.0) {
        return Err(TdsMomentError::Invalid(format!("coefficient bound {b}")));
    }
    let count = multi_index_count(s.dim(), ell);
    if count > cap as u128 {
        return Err(TdsMomentError::FeatureCap { count, cap });
    }
    let indices = multi_indices(s.dim(), ell);
    let nf = indices.len();
    let n = s.len() as f64;
    let rows: Vec<Vec<f64>> = s.samples().par_iter().map(|p| monomials(&p.x, &indices, ell)).collect();
    let x = DMatrix::from_fn(rows.len(), nf, |i, j| rows[i][j]);
    let yv = DVector::from_vec(y);
    let gram = linalg::symmetrize(&(x.tr_mul(&x) / n));
    let xty = x.tr_mul(&yv) / n;
    let yy = yv.norm_squared() / n;
    let objective = |c: &DVector<f64>| (c.dot(&(&gram * c)) - 2.0 * c.dot(&xty) + yy).max(0.0);
    let smooth = 2.0 * linalg::lambda_max(&gram);
    let mut c = DVector::zeros(nf);
    let mut iterations = 0;
    let mut converged = true;
    if smooth > 0.0 {
        let step = 1.0 / smooth;
        let mut history = objective(&c);
        converged = false;
        while iterations < MAX_ITERATIONS {
            let grad = (&gram * &c - &xty) * 2.0;
            let next = (&c - grad * step).map(|v| v.clamp(-b, b));
            let stalled = next == c;
            c = next;
            iterations += 1;
            if stalled {
                converged = true;
                break;
            }
            if iterations % WINDOW == 0 {
                let now = objective(&c);
                if history - now < eps_obj {
                    converged = true;
                    break;
                }
                history = now;
            }
        }
    }
    let obj = objective(&c);
    let poly = DensePolynomial::from_indexed(s.dim(), &indices, c.as_slice());
    Ok(PolyFit { poly, objective: obj, iterations, converged })
}

/// Clipped polynomial `x -> cl_M(p(x))`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolynomialHypothesis {
    pub poly: DensePolynomial,
    #[serde(rename = "M")]
    pub label_bound: f64,
}

impl PolynomialHypothesis {
    pub fn eval(&self, x: &[f64]) -> f64 {
        clip(self.poly.eval(x), self.label_bound)
    }
}

/// How the tester obtains training-marginal moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ReferenceMode {
    /// Exact moments of a known product marginal.
    Analytic { marginal: MarginalSpec },
    /// Moments of a held-out training sample `factor` times the test sample
    /// size. Estimation error of both samples is budgeted by widening the
    /// tolerance to `1.5 Delta`.
    Empirical {
        #[serde(default = "default_factor")]
        factor: usize,
    },
}

fn default_factor() -> usize {
    10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentRunReport {
    pub scale_mode: ScaleMode,
    pub m_train: usize,
    pub m_test: usize,
    /// Strict-mode sample size from the moment-concentration bound (unit constants).
    pub strict_m: f64,
    pub approx: UniformApproxParams,
    pub reference: ReferenceSource,
    /// Tolerance actually applied.
    #[serde(with = "crate::serde_f64")]
    pub effective_delta: f64,
    pub moments: MomentReport,
    pub fit_objective: Option<f64>,
    pub fit_iterations: Option<usize>,
    pub fit_converged: Option<bool>,
}

/// `(1/Delta^2) C^(4 ell) ell^(8 ell + 1) ln(20 d / delta)^(4 ell + 1)` with unit constant.
pub fn strict_moment_sample_size(approx: &UniformApproxParams, params: &TdsParams, dim: usize) -> f64 {
    let l = approx.ell.max(approx.t_mom) as f64;
    let ln = -2.0 * approx.delta.ln()
        + 4.0 * l * params.hc_constant.ln()
        + (8.0 * l + 1.0) * l.ln()
        + (4.0 * l + 1.0) * (20.0 * dim as f64 / params.delta).ln().ln();
    ln.exp()
}

/// Runs the moment pipeline. Randomness derives from `seed`, one stream per phase.
pub fn tds_uniform_learn(
    train: &mut dyn DataSource,
    test_unlabeled: &mut dyn DataSource,
    approx: &UniformApproxParams,
    params: &TdsParams,
    reference: &ReferenceMode,
    seed: u64,
) -> Result<(TdsOutcome, MomentRunReport), TdsMomentError> {
    params.validate()?;
    approx.validate()?;
    let dim = train.dim();
    if test_unlabeled.dim() != dim {
        return Err(TdsMomentError::DimensionMismatch(dim, test_unlabeled.dim()));
    }
    let strict_m = strict_moment_sample_size(approx, params, dim);
    let (m_train, m_test) = match params.scale_mode {
        ScaleMode::Desk => (params.desk_m, params.desk_n),
        ScaleMode::Strict => {
            let m = strict_size("m_train", strict_m)?;
            (m, m)
        }
    };
    let degree = approx.moment_degree();
    let s = train.draw_labeled(m_train, &mut stream_rng(seed, phase::TRAIN))?;
    let s_test = test_unlabeled.draw_unlabeled(m_test, &mut stream_rng(seed, phase::TEST))?;
    let (refs, effective_delta) = match reference {
        ReferenceMode::Analytic { marginal } => {
            if marginal.dim != dim {
                return Err(TdsMomentError::DimensionMismatch(dim, marginal.dim));
            }
            (reference_moments(marginal, degree)?, approx.delta)
        }
        ReferenceMode::Empirical { factor } => {
            let held = train.draw_unlabeled(factor.max(&1) * m_test, &mut stream_rng(seed, phase::HELD_OUT))?;
            (empirical_reference_moments(&held, degree)?, 1.5 * approx.delta)
        }
    };
    let moments = moment_test(&s_test, &refs, degree, effective_delta)?;
    let mut report = MomentRunReport {
        scale_mode: params.scale_mode,
        m_train,
        m_test,
        strict_m,
        approx: approx.clone(),
        reference: refs.source.clone(),
        effective_delta,
        moments: moments.clone(),
        fit_objective: None,
        fit_iterations: None,
        fit_converged: None,
    };
    if !moments.passed {
        let detail = format!(
            "moment {:?} deviates by {:.6} > Delta = {:.6}",
            moments.offending_alpha, moments.max_abs_deviation, effective_delta
        );
        return Ok((TdsOutcome::Reject { reason: RejectReason::MomentShift, detail }, report));
    }
    let fit = fit_constrained_poly_regression(&s, approx.ell, approx.b_coef, approx.eps_prime * approx.eps_prime)?;
    report.fit_objective = Some(fit.objective);
    report.fit_iterations = Some(fit.iterations);
    report.fit_converged = Some(fit.converged);
    let hypothesis = PolynomialHypothesis { poly: fit.poly, label_bound: params.label_bound };
    Ok((TdsOutcome::Accept { hypothesis: Hypothesis::Polynomial(hypothesis) }, report))
}
