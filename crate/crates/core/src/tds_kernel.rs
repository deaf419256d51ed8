//! Kernel-method TDS regression.
//!
//! 1. Draw a labeled reference set `S_ref` and an unlabeled test reference
//!    set `S'_ref` (m each); reject if some test point has norm above `R`.
//! 2. Fit `a` minimizing `sum (y - sum_z a_z K(z, x))^2` over `S_ref`
//!    subject to `a^T K a <= B`.
//! 3. Draw fresh verification sets `S_ver` (train) and `S'_ver` (test), N
//!    each; reject on a radius violation in `S'_ver`.
//! 4. With `phi(x) = (K(x, z))_{z in S_ref u S'_ref}`, form the second-moment
//!    matrices of `phi` on both verification sets and reject when the
//!    largest generalized eigenvalue `rho` exceeds the threshold, or when
//!    the test matrix has mass in the null space of the train matrix.
//! 5. Otherwise accept `h = cl_M(sum_z a_z K(z, .))`.
//!
//! In desk mode the threshold is calibrated against the statistic's own
//! null distribution; see [`KernelRunOptions`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{clip, Dataset};
use crate::kernels::{cmk_eval, gram_matrix, kernel_features, KernelError, KernelSpec};
use crate::linalg::{self, SortedEigen};
use crate::outcome::{Hypothesis, RejectReason, TdsOutcome};
use crate::params::{ParamsError, SampleSizes, ScaleMode, TdsParams};
use crate::rng::{phase, stream_rng};
use crate::source::{DataSource, SourceError};

#[derive(Debug, Error)]
pub enum TdsKernelError {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("matrix is asymmetric: relative deviation {0:.3e}")]
    Asymmetric(f64),
    #[error("matrices have different shapes")]
    ShapeMismatch,
    #[error("labeled data required")]
    Unlabeled,
}

/// Relative PSD tolerance for Gram matrices.
pub const PSD_TOLERANCE: f64 = 1e-8;
/// Pseudoinverse cutoff relative to the largest Gram eigenvalue.
pub const PINV_CUTOFF: f64 = 1e-12;
/// Allowed relative asymmetry of second-moment matrices.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadiusCheck {
    Pass,
    Violation { index: usize },
}

/// Passes iff every point has `||x||_2 <= r`; otherwise reports the first offender.
pub fn radius_check(data: &Dataset, r: f64) -> RadiusCheck {
    match data.samples().iter().position(|s| s.norm() > r) {
        Some(index) => RadiusCheck::Violation { index },
        None => RadiusCheck::Pass,
    }
}

/// `phi(x) = (K(x, z))_z` over a fixed anchor list.
#[derive(Debug, Clone)]
pub struct ReferenceFeatureMap {
    pub anchors: Vec<Vec<f64>>,
    pub spec: KernelSpec,
}

impl ReferenceFeatureMap {
    pub fn new(anchors: Vec<Vec<f64>>, spec: KernelSpec) -> Self {
        Self { anchors, spec }
    }

    /// Feature matrix with one row `phi(x)` per sample.
    pub fn features(&self, data: &Dataset) -> Result<DMatrix<f64>, KernelError> {
        kernel_features(data.points(), &self.anchors, &self.spec)
    }
}

/// `Phi_{z,w} = (1/N) sum_x K(x, z) K(x, w)` over `s_ver`.
pub fn empirical_second_moment(fmap: &ReferenceFeatureMap, s_ver: &Dataset) -> Result<DMatrix<f64>, KernelError> {
    Ok(linalg::second_moment(&fmap.features(s_ver)?))
}

/// Clipped kernel expansion `x -> cl_M(sum_z a_z K(z, x))`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelHypothesis {
    pub anchors: Vec<Vec<f64>>,
    pub coeffs: Vec<f64>,
    pub spec: KernelSpec,
    #[serde(rename = "M")]
    pub label_bound: f64,
}

impl KernelHypothesis {
    /// The unclipped expansion.
    pub fn raw(&self, x: &[f64]) -> f64 {
        self.anchors.iter().zip(&self.coeffs).map(|(z, a)| a * cmk_eval(z, x, &self.spec).unwrap_or(f64::NAN)).sum()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        clip(self.raw(x), self.label_bound)
    }
}

/// Solution of the norm-constrained kernel least-squares problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelFit {
    pub coeffs: Vec<f64>,
    /// `sum (y - K a)^2`.
    pub objective: f64,
    /// `a^T K a`.
    pub constraint_value: f64,
    pub norm_bound: f64,
    /// Lagrange multiplier on the norm constraint (0 when inactive).
    pub multiplier: f64,
    pub rank: usize,
}

/// Minimizes `||y - K a||^2` subject to `a^T K a <= b` for a PSD Gram matrix.
///
/// In the eigenbasis `K = U diag(l) U^T`, `c = U^T y`, the KKT path is
/// `a(mu) = sum_i u_i c_i / (l_i + mu)` over the numerically nonzero
/// eigenvalues, with `a(mu)^T K a(mu) = sum_i l_i c_i^2 / (l_i + mu)^2`
/// non-increasing in `mu`. The smallest feasible `mu` is found by bisection.
pub fn fit_with_gram(k: &DMatrix<f64>, y: &[f64], b: f64) -> Result<KernelFit, TdsKernelError> {
    let n = k.nrows();
    if k.ncols() != n || y.len() != n {
        return Err(TdsKernelError::ShapeMismatch);
    }
    if n == 0 {
        return Ok(KernelFit {
            coeffs: vec![],
            objective: 0.0,
            constraint_value: 0.0,
            norm_bound: b,
            multiplier: 0.0,
            rank: 0,
        });
    }
    let SortedEigen { values, vectors } = linalg::sym_eigen(k);
    let norm = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min = values[n - 1];
    if min < -PSD_TOLERANCE * norm {
        return Err(TdsKernelError::Numerical(format!(
            "Gram matrix not PSD: min eigenvalue {min:.3e}, norm {norm:.3e}"
        )));
    }
    let yv = DVector::from_column_slice(y);
    let c = vectors.tr_mul(&yv);
    let rank = values.iter().take_while(|&&l| l > PINV_CUTOFF * norm).count();
    let lam = &values.as_slice()[..rank];
    let cr = &c.as_slice()[..rank];
    let g = |mu: f64| -> f64 { lam.iter().zip(cr).map(|(l, c)| l * c * c / ((l + mu) * (l + mu))).sum() };
    let mut mu = 0.0;
    if g(0.0) > b {
        let s: f64 = lam.iter().zip(cr).map(|(l, c)| l * c * c).sum();
        let (mut lo, mut hi) = (0.0f64, (s / b).sqrt());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) > b {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        mu = hi;
    }
    let weights: Vec<f64> = lam.iter().zip(cr).map(|(l, c)| c / (l + mu)).collect();
    let a = vectors.columns(0, rank) * DVector::from_vec(weights);
    let ka = k * &a;
    let objective = (&yv - &ka).norm_squared();
    let constraint_value = a.dot(&ka);
    Ok(KernelFit {
        coeffs: a.iter().copied().collect(),
        objective,
        constraint_value,
        norm_bound: b,
        multiplier: mu,
        rank,
    })
}

/// Fits the constrained regression on a labeled reference set.
pub fn fit_constrained_kernel_regression(
    s_ref: &Dataset,
    spec: &KernelSpec,
    b: f64,
) -> Result<KernelFit, TdsKernelError> {
    let y = s_ref.labels().ok_or(TdsKernelError::Unlabeled)?;
    let anchors: Vec<Vec<f64>> = s_ref.points().map(|x| x.to_vec()).collect();
    let g = gram_matrix(&anchors, spec)?;
    fit_with_gram(&g.values, &y, b)
}

/// Outcome of comparing two second-moment matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    /// Largest generalized eigenvalue; `inf` on a null-space violation.
    #[serde(with = "crate::serde_f64")]
    pub rho: f64,
    /// Threshold actually applied.
    #[serde(with = "crate::serde_f64")]
    pub threshold: f64,
    /// `1 + eps^2 / (50 A B)`.
    pub nominal_threshold: f64,
    pub null_violation: bool,
    /// Largest `v^T Phi' v / trace(Phi')` over null directions `v` of `Phi`
    /// (an upper bound when the trace shortcut suffices).
    pub null_fraction: f64,
    pub eig_tolerance: f64,
    pub null_tolerance: f64,
    pub matrix_dim: usize,
    /// Dimension of the kept (numerically nonzero) eigenspace of `Phi`.
    pub rank: usize,
    pub calibration: Option<NullCalibration>,
}

/// Null distribution of `rho` from extra training-marginal verification sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullCalibration {
    #[serde(with = "crate::serde_f64::vec")]
    pub rhos: Vec<f64>,
    pub inflation: f64,
    #[serde(with = "crate::serde_f64")]
    pub calibrated_threshold: f64,
}

/// Whitening of `Phi` by its eigendecomposition, reused across comparisons.
pub struct Whitener {
    kept: DMatrix<f64>,
    whiten: DMatrix<f64>,
    null: DMatrix<f64>,
    pub eig_tolerance: f64,
    pub null_tolerance: f64,
}

/// `rho` together with the null-space diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftStatistic {
    pub rho: f64,
    pub null_violation: bool,
    pub null_fraction: f64,
}

impl Whitener {
    pub fn new(phi: &DMatrix<f64>, eig_tolerance: f64, null_tolerance: f64) -> Result<Self, TdsKernelError> {
        if phi.nrows() != phi.ncols() {
            return Err(TdsKernelError::ShapeMismatch);
        }
        let asym = linalg::asymmetry(phi);
        if asym > SYMMETRY_TOLERANCE {
            return Err(TdsKernelError::Asymmetric(asym));
        }
        let n = phi.nrows();
        let SortedEigen { values, vectors } = linalg::sym_eigen(&linalg::symmetrize(phi));
        let top = if n > 0 { values[0].max(0.0) } else { 0.0 };
        let r = values.iter().take_while(|&&l| top > 0.0 && l > eig_tolerance * top).count();
        let kept = vectors.columns(0, r).into_owned();
        let mut whiten = kept.clone();
        for (j, mut col) in whiten.column_iter_mut().enumerate() {
            col /= values[j].sqrt();
        }
        let null = vectors.columns(r, n - r).into_owned();
        Ok(Self { kept, whiten, null, eig_tolerance, null_tolerance })
    }

    pub fn dim(&self) -> usize {
        self.kept.nrows()
    }

    pub fn rank(&self) -> usize {
        self.kept.ncols()
    }

    fn finish(
        &self,
        whitened: DMatrix<f64>,
        trace: f64,
        kept_trace: f64,
        null_max: impl FnOnce() -> f64,
    ) -> ShiftStatistic {
        let mut null_fraction = 0.0;
        let mut null_violation = false;
        if trace > 0.0 && self.null.ncols() > 0 {
            null_fraction = ((trace - kept_trace) / trace).max(0.0);
            if null_fraction > self.null_tolerance {
                null_fraction = null_max() / trace;
                null_violation = null_fraction > self.null_tolerance;
            }
        }
        let rho = if null_violation {
            f64::INFINITY
        } else if whitened.is_empty() {
            0.0
        } else {
            linalg::lambda_max(&linalg::symmetrize(&whitened)).max(0.0)
        };
        ShiftStatistic { rho, null_violation, null_fraction }
    }

    /// Statistic against an explicit second-moment matrix `Phi'`.
    pub fn compare_matrix(&self, phi_prime: &DMatrix<f64>) -> Result<ShiftStatistic, TdsKernelError> {
        if phi_prime.shape() != (self.dim(), self.dim()) {
            return Err(TdsKernelError::ShapeMismatch);
        }
        let asym = linalg::asymmetry(phi_prime);
        if asym > SYMMETRY_TOLERANCE {
            return Err(TdsKernelError::Asymmetric(asym));
        }
        let whitened = self.whiten.tr_mul(&(phi_prime * &self.whiten));
        let trace = phi_prime.trace();
        let kept_trace = self.kept.tr_mul(&(phi_prime * &self.kept)).trace();
        Ok(self.finish(whitened, trace, kept_trace, || {
            linalg::lambda_max(&linalg::symmetrize(&self.null.tr_mul(&(phi_prime * &self.null))))
        }))
    }

    /// Statistic against `Phi' = F^T F / N` given only the `N x dim` features `F`.
    pub fn compare_features(&self, features: &DMatrix<f64>) -> Result<ShiftStatistic, TdsKernelError> {
        if features.ncols() != self.dim() {
            return Err(TdsKernelError::ShapeMismatch);
        }
        let n = features.nrows().max(1) as f64;
        let fw = features * &self.whiten;
        let whitened = fw.tr_mul(&fw) / n;
        let trace = features.norm_squared() / n;
        let kept_trace = (features * &self.kept).norm_squared() / n;
        Ok(self.finish(whitened, trace, kept_trace, || {
            let fnull = features * &self.null;
            linalg::lambda_max(&linalg::symmetrize(&(fnull.tr_mul(&fnull) / n)))
        }))
    }
}

/// `rho = max a^T Phi' a` subject to `a^T Phi a <= 1`, via whitening by the
/// pseudo-inverse square root of `Phi`, plus the null-space containment
/// check. The reported threshold is left at `+inf`; callers set it.
pub fn spectral_shift_statistic(
    phi: &DMatrix<f64>,
    phi_prime: &DMatrix<f64>,
    eig_tolerance_rel: f64,
) -> Result<SpectralReport, TdsKernelError> {
    let opts = KernelRunOptions { eig_tolerance_rel, ..Default::default() };
    let w = Whitener::new(phi, eig_tolerance_rel, opts.null_tolerance)?;
    let s = w.compare_matrix(phi_prime)?;
    Ok(SpectralReport {
        rho: s.rho,
        threshold: f64::INFINITY,
        nominal_threshold: f64::INFINITY,
        null_violation: s.null_violation,
        null_fraction: s.null_fraction,
        eig_tolerance: eig_tolerance_rel,
        null_tolerance: opts.null_tolerance,
        matrix_dim: w.dim(),
        rank: w.rank(),
        calibration: None,
    })
}

/// Numerical and calibration settings for the kernel pipeline.
///
/// In desk mode with `null_replicates > 0`, `null_replicates` extra
/// verification sets are drawn from the training marginal and compared with
/// `S_ver` exactly like the test set. The applied threshold is
/// `max(1 + eps^2/(50AB), 1 + null_inflation * (max_j rho_j - 1))`. At desk
/// sample sizes the statistic fluctuates far above the theoretical
/// threshold even without shift, so the uncalibrated test would reject
/// nearly always.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelRunOptions {
    pub eig_tolerance_rel: f64,
    pub null_tolerance: f64,
    pub null_replicates: usize,
    pub null_inflation: f64,
}

impl Default for KernelRunOptions {
    fn default() -> Self {
        Self { eig_tolerance_rel: 1e-10, null_tolerance: 1e-8, null_replicates: 8, null_inflation: 1.25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusViolation {
    /// `"reference"` or `"verification"`.
    pub set: String,
    pub index: usize,
    pub norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelRunReport {
    pub scale_mode: ScaleMode,
    pub sizes: SampleSizes,
    /// Universal constant used in the strict sample-size formulas.
    pub strict_constant: f64,
    pub radius: f64,
    pub radius_violation: Option<RadiusViolation>,
    pub fit_objective: Option<f64>,
    pub fit_constraint_value: Option<f64>,
    pub fit_multiplier: Option<f64>,
    pub spectral: Option<SpectralReport>,
}

/// `1 + eps^2 / (50 A B)`.
pub fn nominal_threshold(params: &TdsParams) -> f64 {
    1.0 + params.epsilon * params.epsilon / (50.0 * params.sup_bound * params.norm_bound)
}

/// Runs the kernel pipeline. All randomness derives from `seed`, one stream per phase.
pub fn tds_kernel_learn(
    train: &mut dyn DataSource,
    test_unlabeled: &mut dyn DataSource,
    spec: &KernelSpec,
    params: &TdsParams,
    options: &KernelRunOptions,
    seed: u64,
) -> Result<(TdsOutcome, KernelRunReport), TdsKernelError> {
    params.validate()?;
    spec.validate()?;
    let sizes = params.kernel_sample_sizes()?;
    let r = params.radius;
    let mut report = KernelRunReport {
        scale_mode: params.scale_mode,
        sizes,
        strict_constant: 1.0,
        radius: r,
        radius_violation: None,
        fit_objective: None,
        fit_constraint_value: None,
        fit_multiplier: None,
        spectral: None,
    };
    let reject_radius = |report: &mut KernelRunReport, set: &str, data: &Dataset, index: usize| {
        let norm = data.samples()[index].norm();
        report.radius_violation = Some(RadiusViolation { set: set.into(), index, norm });
        TdsOutcome::Reject {
            reason: RejectReason::RadiusViolation,
            detail: format!("{set} test point {index} has norm {norm:.6} > R = {r}"),
        }
    };

    let s_ref = train.draw_labeled(sizes.m, &mut stream_rng(seed, phase::REF_LABELED))?;
    let s_ref_test = test_unlabeled.draw_unlabeled(sizes.m, &mut stream_rng(seed, phase::REF_UNLABELED))?;
    if let RadiusCheck::Violation { index } = radius_check(&s_ref_test, r) {
        let outcome = reject_radius(&mut report, "reference", &s_ref_test, index);
        return Ok((outcome, report));
    }

    let fit = fit_constrained_kernel_regression(&s_ref, spec, params.norm_bound)?;
    report.fit_objective = Some(fit.objective);
    report.fit_constraint_value = Some(fit.constraint_value);
    report.fit_multiplier = Some(fit.multiplier);

    let s_ver = train.draw_unlabeled(sizes.n, &mut stream_rng(seed, phase::VER_TRAIN))?;
    let s_ver_test = test_unlabeled.draw_unlabeled(sizes.n, &mut stream_rng(seed, phase::VER_TEST))?;
    if let RadiusCheck::Violation { index } = radius_check(&s_ver_test, r) {
        let outcome = reject_radius(&mut report, "verification", &s_ver_test, index);
        return Ok((outcome, report));
    }

    let anchors: Vec<Vec<f64>> = s_ref.points().chain(s_ref_test.points()).map(|x| x.to_vec()).collect();
    let fmap = ReferenceFeatureMap::new(anchors, spec.clone());
    let phi = empirical_second_moment(&fmap, &s_ver)?;
    let whitener = Whitener::new(&phi, options.eig_tolerance_rel, options.null_tolerance)?;
    let stat = whitener.compare_features(&fmap.features(&s_ver_test)?)?;

    let nominal = nominal_threshold(params);
    let mut threshold = nominal;
    let mut calibration = None;
    if params.scale_mode == ScaleMode::Desk && options.null_replicates > 0 {
        let mut rhos = Vec::with_capacity(options.null_replicates);
        for j in 0..options.null_replicates {
            let extra = train.draw_unlabeled(sizes.n, &mut stream_rng(seed, phase::NULL_BASE + j as u64))?;
            rhos.push(whitener.compare_features(&fmap.features(&extra)?)?.rho);
        }
        let worst = rhos.iter().copied().filter(|v| v.is_finite()).fold(1.0f64, f64::max);
        let calibrated = 1.0 + options.null_inflation * (worst - 1.0);
        threshold = nominal.max(calibrated);
        calibration =
            Some(NullCalibration { rhos, inflation: options.null_inflation, calibrated_threshold: calibrated });
    }
    let spectral = SpectralReport {
        rho: stat.rho,
        threshold,
        nominal_threshold: nominal,
        null_violation: stat.null_violation,
        null_fraction: stat.null_fraction,
        eig_tolerance: options.eig_tolerance_rel,
        null_tolerance: options.null_tolerance,
        matrix_dim: whitener.dim(),
        rank: whitener.rank(),
        calibration,
    };
    report.spectral = Some(spectral);

    if stat.null_violation {
        let detail = format!("test second moments leave the train span (null fraction {:.3e})", stat.null_fraction);
        return Ok((TdsOutcome::Reject { reason: RejectReason::SpectralShift, detail }, report));
    }
    if stat.rho > threshold {
        let detail = format!("rho = {:.6} exceeds threshold {:.6}", stat.rho, threshold);
        return Ok((TdsOutcome::Reject { reason: RejectReason::SpectralShift, detail }, report));
    }
    let hypothesis = KernelHypothesis {
        anchors: s_ref.points().map(|x| x.to_vec()).collect(),
        coeffs: fit.coeffs,
        spec: spec.clone(),
        label_bound: params.label_bound,
    };
    Ok((TdsOutcome::Accept { hypothesis: Hypothesis::Kernel(hypothesis) }, report))
}
