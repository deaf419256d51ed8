//! Experiment configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use tds_core::kernels::KernelSpec;
use tds_core::scenarios::{MarginalKind, ScenarioSpec};
use tds_core::tds_kernel::KernelRunOptions;
use tds_core::tds_moment::{ReferenceMode, UniformApproxParams};
use tds_core::TdsParams;

use crate::HarnessError;

fn default_trials() -> usize {
    20
}

fn default_holdout() -> usize {
    10_000
}

/// Which pipeline a trial runs, with its pipeline-specific settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PipelineConfig {
    Kernel {
        kernel: KernelSpec,
        #[serde(default)]
        options: KernelRunOptions,
        /// Replace the kernel, `A` and `B` by values read off an explicit
        /// approximant of a sigmoid-network target.
        #[serde(default)]
        derive_bounds: bool,
    },
    Moment {
        approx: UniformApproxParams,
        /// Defaults to analytic moments when the training marginal has them,
        /// otherwise to a held-out sample ten times the test size.
        #[serde(default)]
        reference: Option<ReferenceMode>,
    },
}

impl PipelineConfig {
    pub fn name(&self) -> &'static str {
        match self {
            PipelineConfig::Kernel { .. } => "kernel",
            PipelineConfig::Moment { .. } => "moment",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub scenario: ScenarioSpec,
    pub pipeline: PipelineConfig,
    pub params: TdsParams,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Labeled points used to evaluate losses after each trial.
    #[serde(default = "default_holdout")]
    pub holdout_size: usize,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.scenario.validate()?;
        self.params.validate()?;
        if self.holdout_size < 2 {
            return Err(HarnessError::Config("holdout_size must be at least 2".into()));
        }
        match &self.pipeline {
            PipelineConfig::Kernel { kernel, .. } => {
                kernel.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
            }
            PipelineConfig::Moment { approx, .. } => {
                approx.validate()?;
            }
        }
        Ok(())
    }

    /// Reference-moment mode for the moment pipeline.
    pub fn reference_mode(&self) -> Option<ReferenceMode> {
        match &self.pipeline {
            PipelineConfig::Moment { reference: Some(r), .. } => Some(r.clone()),
            PipelineConfig::Moment { reference: None, .. } => {
                let m = &self.scenario.train_marginal;
                Some(match m.kind {
                    MarginalKind::Gaussian { .. } | MarginalKind::UniformCube { .. } => {
                        ReferenceMode::Analytic { marginal: m.clone() }
                    }
                    _ => ReferenceMode::Empirical { factor: 10 },
                })
            }
            PipelineConfig::Kernel { .. } => None,
        }
    }
}
