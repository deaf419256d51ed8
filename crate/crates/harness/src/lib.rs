//! Experiment orchestration for TDS regression: repeated seeded trials of
//! either pipeline, holdout evaluation of accepted hypotheses, and JSON,
//! CSV and text reports.

pub mod bounds;
pub mod config;
pub mod error;
pub mod experiment;
pub mod report;

pub use tds_core;

pub use bounds::{derive_net_bounds, DerivedBounds};
pub use config::{ExperimentConfig, PipelineConfig};
pub use error::HarnessError;
pub use experiment::{run_experiment, run_trial, ExperimentReport, Summary, TrialDiagnostics, TrialRecord};
pub use report::{emit_report, report_csv, report_json, report_text, ReportPaths};
