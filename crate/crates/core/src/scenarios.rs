//! Synthetic marginals, targets, label models and shift scenarios.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{clip, Dataset, LabeledSample};
use crate::nets::{NetError, NeuralNet};
use crate::polyapprox::DensePolynomial;
use crate::rng::stream_rng;
use crate::source::{DataSource, SourceError};

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("invalid marginal: {0}")]
    Marginal(String),
    #[error("target expects dimension {target}, marginal has {marginal}")]
    DimensionMismatch { target: usize, marginal: usize },
    #[error("invalid label model: {0}")]
    Labels(String),
    #[error(transparent)]
    Net(#[from] NetError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarginalKind {
    /// Uniform on the Euclidean ball of the given radius.
    UniformBall { radius: f64 },
    /// Uniform on `[-a, a]^d`.
    UniformCube { a: f64 },
    /// Independent coordinates `mean_i + scale_i N(0, 1)`.
    Gaussian { mean: Vec<f64>, scale: Vec<f64> },
    /// Independent coordinates `scale * t(dof)`.
    StudentT { dof: f64, scale: f64 },
    /// Finite mixture of point masses.
    PointMassMixture { points: Vec<Vec<f64>>, weights: Vec<f64> },
    /// `x -> scale .* x + shift` applied to draws from `base`.
    Affine { base: Box<MarginalKind>, scale: Vec<f64>, shift: Vec<f64> },
}

/// A feature distribution on `R^dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalSpec {
    pub dim: usize,
    #[serde(flatten)]
    pub kind: MarginalKind,
}

impl MarginalSpec {
    pub fn new(dim: usize, kind: MarginalKind) -> Result<Self, ScenarioError> {
        let m = Self { dim, kind };
        m.validate()?;
        Ok(m)
    }

    pub fn uniform_ball(dim: usize, radius: f64) -> Self {
        Self { dim, kind: MarginalKind::UniformBall { radius } }
    }

    pub fn standard_gaussian(dim: usize) -> Self {
        Self { dim, kind: MarginalKind::Gaussian { mean: vec![0.0; dim], scale: vec![1.0; dim] } }
    }

    /// Student-t with unit coordinate variance (needs `dof > 2`).
    pub fn unit_variance_student_t(dim: usize, dof: f64) -> Self {
        Self { dim, kind: MarginalKind::StudentT { dof, scale: ((dof - 2.0) / dof).sqrt() } }
    }

    /// This marginal pushed through `x -> scale .* x + shift`.
    pub fn affine(&self, scale: Vec<f64>, shift: Vec<f64>) -> Self {
        Self { dim: self.dim, kind: MarginalKind::Affine { base: Box::new(self.kind.clone()), scale, shift } }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.dim == 0 {
            return Err(ScenarioError::Marginal("dimension must be positive".into()));
        }
        validate_kind(&self.kind, self.dim)
    }

    pub fn draw_point(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        draw_kind(&self.kind, self.dim, rng)
    }

    pub fn draw_points(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        (0..n).map(|_| self.draw_point(rng)).collect()
    }
}

fn bad(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Marginal(msg.into())
}

fn validate_kind(kind: &MarginalKind, dim: usize) -> Result<(), ScenarioError> {
    let positive = |v: f64| v.is_finite() && v > 0.0;
    match kind {
        MarginalKind::UniformBall { radius } if !positive(*radius) => Err(bad("ball radius must be positive")),
        MarginalKind::UniformCube { a } if !positive(*a) => Err(bad("cube half-width must be positive")),
        MarginalKind::Gaussian { mean, scale } => {
            if mean.len() != dim || scale.len() != dim {
                return Err(bad("gaussian mean/scale length must equal dim"));
            }
            if !scale.iter().all(|s| positive(*s)) || !mean.iter().all(|m| m.is_finite()) {
                return Err(bad("gaussian scales must be positive and means finite"));
            }
            Ok(())
        }
        MarginalKind::StudentT { dof, scale } if !positive(*dof) || !positive(*scale) => {
            Err(bad("student-t dof and scale must be positive"))
        }
        MarginalKind::PointMassMixture { points, weights } => {
            if points.is_empty() || points.len() != weights.len() {
                return Err(bad("need one weight per point"));
            }
            if points.iter().any(|p| p.len() != dim || p.iter().any(|v| !v.is_finite())) {
                return Err(bad("points must be finite with length dim"));
            }
            if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9
            {
                return Err(bad("weights must be nonnegative and sum to 1"));
            }
            Ok(())
        }
        MarginalKind::Affine { base, scale, shift } => {
            if scale.len() != dim || shift.len() != dim || !scale.iter().chain(shift).all(|v| v.is_finite()) {
                return Err(bad("affine scale/shift must be finite with length dim"));
            }
            validate_kind(base, dim)
        }
        _ => Ok(()),
    }
}

fn draw_kind(kind: &MarginalKind, dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match kind {
        MarginalKind::UniformBall { radius } => uniform_ball_point(dim, *radius, rng),
        MarginalKind::UniformCube { a } => (0..dim).map(|_| rng.random_range(-*a..=*a)).collect(),
        MarginalKind::Gaussian { mean, scale } => {
            mean.iter().zip(scale).map(|(m, s)| m + s * rng.sample::<f64, _>(StandardNormal)).collect()
        }
        MarginalKind::StudentT { dof, scale } => {
            let t = StudentT::new(*dof).expect("validated dof");
            (0..dim).map(|_| scale * t.sample(rng)).collect()
        }
        MarginalKind::PointMassMixture { points, weights } => {
            let idx = WeightedIndex::new(weights).expect("validated weights");
            points[idx.sample(rng)].clone()
        }
        MarginalKind::Affine { base, scale, shift } => {
            let x = draw_kind(base, dim, rng);
            x.iter().zip(scale).zip(shift).map(|((v, s), b)| v * s + b).collect()
        }
    }
}

/// Uniform point in the radius-`r` ball: a normalized Gaussian direction
/// scaled by `r U^(1/d)`.
pub fn uniform_ball_point(d: usize, r: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut g: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    let u: f64 = rng.random();
    let s = if norm > 0.0 { r * u.powf(1.0 / d as f64) / norm } else { 0.0 };
    g.iter_mut().for_each(|v| *v *= s);
    g
}

pub fn sample_uniform_ball(n: usize, d: usize, r: f64, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n).map(|_| uniform_ball_point(d, r, rng)).collect()
}

/// `n` i.i.d. unlabeled draws from `spec`, determined by `seed`.
pub fn sample(spec: &MarginalSpec, n: usize, seed: u64) -> Result<Dataset, ScenarioError> {
    spec.validate()?;
    let mut rng = stream_rng(seed, 0);
    Dataset::unlabeled(spec.dim, spec.draw_points(n, &mut rng)).map_err(|e| bad(e.to_string()))
}

/// Ground-truth regression function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Net(NeuralNet),
    Polynomial(DensePolynomial),
}

impl Target {
    pub fn dim(&self) -> usize {
        match self {
            Target::Net(n) => n.input_dim(),
            Target::Polynomial(p) => p.dim(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Target::Net(n) => n.eval_unchecked(x),
            Target::Polynomial(p) => p.eval(x),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Target::Polynomial(DensePolynomial::zero(dim))
    }
}

/// Train/test marginals, a target and a label model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub train_marginal: MarginalSpec,
    pub test_marginal: MarginalSpec,
    pub target: Target,
    #[serde(default)]
    pub label_noise_sd: f64,
    /// Fraction of labels replaced by independent `Uniform[-M, M]` draws.
    #[serde(default)]
    pub label_corruption_rate: f64,
    /// Clip level applied to generated labels; `None` leaves them unbounded.
    #[serde(rename = "M")]
    pub label_bound: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Train,
    Test,
}

/// Residual statistics of the generator's own target on a labeled sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelStats {
    /// `sqrt(mean (y - f*(x))^2)`: an upper estimate of the best loss in the class.
    pub target_loss: f64,
    pub n: usize,
    pub corrupted: usize,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.train_marginal.validate()?;
        self.test_marginal.validate()?;
        for m in [&self.train_marginal, &self.test_marginal] {
            if m.dim != self.target.dim() {
                return Err(ScenarioError::DimensionMismatch { target: self.target.dim(), marginal: m.dim });
            }
        }
        if let Target::Net(n) = &self.target {
            n.validate()?;
        }
        if !(self.label_noise_sd.is_finite() && self.label_noise_sd >= 0.0) {
            return Err(ScenarioError::Labels("noise sd must be nonnegative".into()));
        }
        if !(0.0..=1.0).contains(&self.label_corruption_rate) {
            return Err(ScenarioError::Labels("corruption rate must lie in [0, 1]".into()));
        }
        match self.label_bound {
            Some(m) if !(m > 0.0) => Err(ScenarioError::Labels("label bound must be positive".into())),
            None if self.label_corruption_rate > 0.0 => {
                Err(ScenarioError::Labels("corruption draws from [-M, M] and needs a label bound".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn marginal(&self, side: Side) -> &MarginalSpec {
        match side {
            Side::Train => &self.train_marginal,
            Side::Test => &self.test_marginal,
        }
    }

    pub fn dim(&self) -> usize {
        self.train_marginal.dim
    }

    /// One label for `x`: clipped noisy target, possibly corrupted.
    pub fn draw_label(&self, x: &[f64], rng: &mut ChaCha8Rng) -> (f64, bool) {
        let mut y = self.target.eval(x);
        if self.label_noise_sd > 0.0 {
            y += Normal::new(0.0, self.label_noise_sd).expect("validated sd").sample(rng);
        }
        if let Some(m) = self.label_bound {
            y = clip(y, m);
        }
        if self.label_corruption_rate > 0.0 && rng.random::<f64>() < self.label_corruption_rate {
            let m = self.label_bound.expect("validated bound");
            return (rng.random_range(-m..=m), true);
        }
        (y, false)
    }

    /// `n` labeled draws from one side of the scenario.
    pub fn generate(&self, side: Side, n: usize, rng: &mut ChaCha8Rng) -> Result<(Dataset, LabelStats), ScenarioError> {
        self.validate()?;
        let xs = self.marginal(side).draw_points(n, rng);
        let data = Dataset::unlabeled(self.dim(), xs).map_err(|e| bad(e.to_string()))?;
        label(&data, self, rng)
    }
}

/// Labels `data` under the scenario's label model and records the target's residual.
pub fn label(
    data: &Dataset,
    scenario: &ScenarioSpec,
    rng: &mut ChaCha8Rng,
) -> Result<(Dataset, LabelStats), ScenarioError> {
    if data.dim() != scenario.target.dim() {
        return Err(ScenarioError::DimensionMismatch { target: scenario.target.dim(), marginal: data.dim() });
    }
    let mut corrupted = 0;
    let mut sq = 0.0;
    let samples: Vec<LabeledSample> = data
        .points()
        .map(|x| {
            let (y, c) = scenario.draw_label(x, rng);
            corrupted += c as usize;
            let r = y - scenario.target.eval(x);
            sq += r * r;
            LabeledSample::labeled(x.to_vec(), y)
        })
        .collect();
    let n = samples.len();
    let labeled = Dataset::new(data.dim(), true, samples).map_err(|e| ScenarioError::Labels(e.to_string()))?;
    let target_loss = if n > 0 { (sq / n as f64).sqrt() } else { 0.0 };
    Ok((labeled, LabelStats { target_loss, n, corrupted }))
}

/// An unbounded stream of draws from one side of a scenario.
#[derive(Debug, Clone)]
pub struct ScenarioSource {
    scenario: ScenarioSpec,
    side: Side,
    labeled: bool,
}

impl ScenarioSource {
    pub fn new(scenario: ScenarioSpec, side: Side, labeled: bool) -> Result<Self, ScenarioError> {
        scenario.validate()?;
        Ok(Self { scenario, side, labeled })
    }

    pub fn train(scenario: &ScenarioSpec) -> Result<Self, ScenarioError> {
        Self::new(scenario.clone(), Side::Train, true)
    }

    pub fn test_unlabeled(scenario: &ScenarioSpec) -> Result<Self, ScenarioError> {
        Self::new(scenario.clone(), Side::Test, false)
    }
}

impl DataSource for ScenarioSource {
    fn dim(&self) -> usize {
        self.scenario.dim()
    }

    fn is_labeled(&self) -> bool {
        self.labeled
    }

    fn draw(&mut self, n: usize, rng: &mut ChaCha8Rng) -> Result<Dataset, SourceError> {
        let xs = self.scenario.marginal(self.side).draw_points(n, rng);
        if !self.labeled {
            return Ok(Dataset::unlabeled(self.dim(), xs)?);
        }
        let samples = xs
            .into_iter()
            .map(|x| {
                let (y, _) = self.scenario.draw_label(&x, rng);
                LabeledSample::labeled(x, y)
            })
            .collect();
        Ok(Dataset::new(self.dim(), true, samples)?)
    }
}

/// The two instances showing that test-label moment bounds alone do not
/// suffice. Training is a point mass at `(0, 0)` in both. Test draws the
/// planted point `x_hat = sqrt(Y/p) w` with probability `p`, labeled
/// `sqrt(Y/p)` (instance "linear", consistent with `x -> w.x`) or `0`
/// (instance "zero", consistent with `x -> 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarialPair {
    pub linear: ScenarioSpec,
    pub zero: ScenarioSpec,
    pub planted_point: Vec<f64>,
    pub planted_label: f64,
    pub p: f64,
    pub y_moment: f64,
    pub m_expected: usize,
}

impl AdversarialPair {
    /// `E[y^2]` under the linear instance's test distribution: `p (sqrt(Y/p))^2`.
    pub fn second_moment_linear(&self) -> f64 {
        self.p * self.planted_label * self.planted_label
    }

    /// Per-instance weighted error `p (h(x_hat) - y)^2` at the planted point.
    pub fn planted_errors(&self, h_at_planted: f64) -> (f64, f64) {
        let lin = self.p * (h_at_planted - self.planted_label).powi(2);
        let zero = self.p * h_at_planted.powi(2);
        (lin, zero)
    }
}

/// Builds the pair in `d = 2` with `w = e_1`. Requires `0 < p < 1`, `Y > 0`.
pub fn adversarial_label_scenario(y_moment: f64, p: f64, m_expected: usize) -> Result<AdversarialPair, ScenarioError> {
    if !(p > 0.0 && p < 1.0) || !(y_moment > 0.0 && y_moment.is_finite()) {
        return Err(ScenarioError::Labels("need 0 < p < 1 and Y > 0".into()));
    }
    let d = 2;
    let w = vec![1.0, 0.0];
    let scale = (y_moment / p).sqrt();
    let planted: Vec<f64> = w.iter().map(|v| v * scale).collect();
    let train =
        MarginalSpec::new(d, MarginalKind::PointMassMixture { points: vec![vec![0.0; d]], weights: vec![1.0] })?;
    let test = MarginalSpec::new(
        d,
        MarginalKind::PointMassMixture { points: vec![vec![0.0; d], planted.clone()], weights: vec![1.0 - p, p] },
    )?;
    let make = |target: Target| ScenarioSpec {
        train_marginal: train.clone(),
        test_marginal: test.clone(),
        target,
        label_noise_sd: 0.0,
        label_corruption_rate: 0.0,
        label_bound: None,
        seed: 0,
    };
    Ok(AdversarialPair {
        linear: make(Target::Polynomial(DensePolynomial::linear(&w))),
        zero: make(Target::zero(d)),
        planted_point: planted,
        planted_label: scale,
        p,
        y_moment,
        m_expected,
    })
}
