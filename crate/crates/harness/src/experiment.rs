//! Repeated seeded trials and their aggregation.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use tds_core::kernels::KernelSpec;
use tds_core::nets::Activation;
use tds_core::rng::{derive_seed, phase, stream_rng};
use tds_core::scenarios::{ScenarioSource, Side, Target};
use tds_core::serde_f64;
use tds_core::tds_kernel::{tds_kernel_learn, KernelRunReport};
use tds_core::tds_moment::{tds_uniform_learn, MomentRunReport};
use tds_core::{Dataset, RejectReason, TdsOutcome, TdsParams};

use crate::bounds::{derive_net_bounds, DerivedBounds};
use crate::config::{ExperimentConfig, PipelineConfig};
use crate::HarnessError;

/// Pipeline-specific report of one trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "pipeline", rename_all = "snake_case")]
pub enum TrialDiagnostics {
    Kernel(KernelRunReport),
    Moment(MomentRunReport),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub seed: u64,
    pub accepted: bool,
    pub reject_reason: Option<RejectReason>,
    pub detail: Option<String>,
    /// Spectral ratio (kernel) or largest moment deviation (moment).
    #[serde(with = "serde_f64::option")]
    pub statistic: Option<f64>,
    #[serde(with = "serde_f64::option")]
    pub threshold: Option<f64>,
    /// Holdout test loss of the returned hypothesis.
    pub test_loss: Option<f64>,
    pub test_loss_se: Option<f64>,
    /// Training loss of the generating target: an upper estimate of `opt`.
    pub opt_hat: f64,
    /// Training plus test loss of the generating target: an upper estimate of `lambda`.
    pub lambda_hat: f64,
    /// `opt_hat + lambda_hat + 5 eps`.
    pub bound: f64,
    /// `test_loss - (opt_hat + lambda_hat)`.
    pub excess: Option<f64>,
    /// Whether `test_loss <= bound + 2 se`; `None` on reject.
    pub sound: Option<bool>,
    pub diagnostics: TrialDiagnostics,
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_trials: usize,
    pub n_accepted: usize,
    pub accept_rate: f64,
    pub reject_counts: BTreeMap<String, usize>,
    pub mean_excess: Option<f64>,
    pub p95_excess: Option<f64>,
    pub soundness_violations: usize,
}

impl Summary {
    pub fn from_trials(trials: &[TrialRecord]) -> Self {
        let n_trials = trials.len();
        let n_accepted = trials.iter().filter(|t| t.accepted).count();
        let mut reject_counts = BTreeMap::new();
        for reason in trials.iter().filter_map(|t| t.reject_reason) {
            *reject_counts.entry(format!("{reason:?}")).or_insert(0) += 1;
        }
        let mut excess: Vec<f64> = trials.iter().filter_map(|t| t.excess).collect();
        excess.sort_by(f64::total_cmp);
        let mean_excess = (!excess.is_empty()).then(|| excess.iter().sum::<f64>() / excess.len() as f64);
        // Nearest-rank percentile.
        let p95_excess = (!excess.is_empty()).then(|| {
            let rank = (0.95 * excess.len() as f64).ceil() as usize;
            excess[rank.clamp(1, excess.len()) - 1]
        });
        Self {
            n_trials,
            n_accepted,
            accept_rate: if n_trials == 0 { 0.0 } else { n_accepted as f64 / n_trials as f64 },
            reject_counts,
            mean_excess,
            p95_excess,
            soundness_violations: trials.iter().filter(|t| t.sound == Some(false)).count(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    /// Kernel parameters actually used, when derived from the target net.
    pub derived_bounds: Option<DerivedBounds>,
    pub trials: Vec<TrialRecord>,
    pub summary: Summary,
    #[serde(skip)]
    pub elapsed: Duration,
}

/// Pipeline settings after optional bound derivation, shared by all trials.
#[derive(Debug, Clone)]
struct Resolved {
    params: TdsParams,
    kernel: Option<KernelSpec>,
    derived: Option<DerivedBounds>,
}

fn resolve(config: &ExperimentConfig) -> Result<Resolved, HarnessError> {
    config.validate()?;
    let mut params = config.params.clone();
    match &config.pipeline {
        PipelineConfig::Kernel { kernel, derive_bounds: false, .. } => {
            Ok(Resolved { params, kernel: Some(kernel.clone()), derived: None })
        }
        PipelineConfig::Kernel { derive_bounds: true, .. } => {
            let net = match &config.scenario.target {
                Target::Net(n) if n.activation == Activation::Sigmoid => n,
                _ => return Err(HarnessError::Config("derive_bounds needs a sigmoid-net target".into())),
            };
            let derived = derive_net_bounds(net, params.epsilon, params.radius)?;
            params.sup_bound = derived.sup_bound;
            match derived.norm_bound {
                Some(b) => params.norm_bound = b,
                None => log::warn!("approximant too large to expand; keeping configured B = {}", params.norm_bound),
            }
            log::info!(
                "derived kernel {:?}, A = {:.3e}, B = {:.3e}",
                derived.kernel.degree_vector,
                params.sup_bound,
                params.norm_bound
            );
            Ok(Resolved { params, kernel: Some(derived.kernel.clone()), derived: Some(derived) })
        }
        PipelineConfig::Moment { .. } => Ok(Resolved { params, kernel: None, derived: None }),
    }
}

/// Root mean squared loss of `h` on `data` with its delta-method standard error.
fn loss_with_se(h: impl Fn(&[f64]) -> f64, data: &Dataset) -> (f64, f64) {
    let sq: Vec<f64> = data
        .samples()
        .iter()
        .map(|s| {
            let r = s.y.unwrap_or_default() - h(&s.x);
            r * r
        })
        .collect();
    let n = sq.len() as f64;
    let mean = sq.iter().sum::<f64>() / n;
    let var = sq.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let loss = mean.sqrt();
    let se = if loss > 0.0 { (var / n).sqrt() / (2.0 * loss) } else { 0.0 };
    (loss, se)
}

fn trial_with(config: &ExperimentConfig, resolved: &Resolved, index: usize) -> Result<TrialRecord, HarnessError> {
    let start = Instant::now();
    let seed = derive_seed(config.seed, index as u64);
    let scenario = &config.scenario;
    let params = &resolved.params;
    let mut train = ScenarioSource::train(scenario)?;
    let mut test = ScenarioSource::test_unlabeled(scenario)?;

    let (outcome, diagnostics, statistic, threshold) = match &config.pipeline {
        PipelineConfig::Kernel { options, .. } => {
            let spec = resolved.kernel.as_ref().expect("kernel resolved");
            let (outcome, report) = tds_kernel_learn(&mut train, &mut test, spec, params, options, seed)?;
            let stat = report.spectral.as_ref().map(|s| s.rho);
            let thr = report.spectral.as_ref().map(|s| s.threshold);
            (outcome, TrialDiagnostics::Kernel(report), stat, thr)
        }
        PipelineConfig::Moment { approx, .. } => {
            let mode = config.reference_mode().expect("moment pipeline has a reference");
            let (outcome, report) = tds_uniform_learn(&mut train, &mut test, approx, params, &mode, seed)?;
            let stat = Some(report.moments.max_abs_deviation);
            let thr = Some(report.effective_delta);
            (outcome, TrialDiagnostics::Moment(report), stat, thr)
        }
    };

    let (_, train_stats) =
        scenario.generate(Side::Train, config.holdout_size, &mut stream_rng(seed, phase::HOLDOUT_TRAIN))?;
    let (test_holdout, test_stats) =
        scenario.generate(Side::Test, config.holdout_size, &mut stream_rng(seed, phase::HOLDOUT_EVAL))?;
    let opt_hat = train_stats.target_loss;
    let lambda_hat = train_stats.target_loss + test_stats.target_loss;
    let bound = opt_hat + lambda_hat + 5.0 * params.epsilon;

    let mut record = TrialRecord {
        index,
        seed,
        accepted: outcome.is_accept(),
        reject_reason: outcome.reject_reason(),
        detail: None,
        statistic,
        threshold,
        test_loss: None,
        test_loss_se: None,
        opt_hat,
        lambda_hat,
        bound,
        excess: None,
        sound: None,
        diagnostics,
        elapsed: Duration::ZERO,
    };
    match &outcome {
        TdsOutcome::Accept { hypothesis } => {
            let (loss, se) = loss_with_se(|x| hypothesis.eval(x), &test_holdout);
            record.test_loss = Some(loss);
            record.test_loss_se = Some(se);
            record.excess = Some(loss - (opt_hat + lambda_hat));
            record.sound = Some(loss <= bound + 2.0 * se);
        }
        TdsOutcome::Reject { detail, .. } => record.detail = Some(detail.clone()),
    }
    record.elapsed = start.elapsed();
    log::debug!("trial {index}: accepted={} in {:?}", record.accepted, record.elapsed);
    Ok(record)
}

/// Runs trial `index` of `config` on its own.
pub fn run_trial(config: &ExperimentConfig, index: usize) -> Result<TrialRecord, HarnessError> {
    trial_with(config, &resolve(config)?, index)
}

fn thread_pool() -> Result<rayon::ThreadPool, HarnessError> {
    let threads = match std::env::var("TDS_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| HarnessError::Config(format!("TDS_THREADS must be a count, got {v:?}")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| HarnessError::Config(e.to_string()))
}

/// Runs every trial of `config`, in parallel, and aggregates them in index order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    let start = Instant::now();
    let resolved = resolve(config)?;
    let pool = thread_pool()?;
    let trials = pool.install(|| {
        (0..config.trials).into_par_iter().map(|i| trial_with(config, &resolved, i)).collect::<Result<Vec<_>, _>>()
    })?;
    let summary = Summary::from_trials(&trials);
    Ok(ExperimentReport {
        config: config.clone(),
        derived_bounds: resolved.derived,
        trials,
        summary,
        elapsed: start.elapsed(),
    })
}
