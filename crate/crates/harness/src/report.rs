//! JSON, CSV and text renderings of an experiment report.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;

use crate::experiment::{ExperimentReport, TrialRecord};
use crate::HarnessError;

/// Where [`emit_report`] writes each rendering. `None` skips it.
#[derive(Debug, Clone, Default)]
pub struct ReportPaths {
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub text: Option<PathBuf>,
}

impl ReportPaths {
    /// `report.json`, `trials.csv` and `summary.txt` under `dir`.
    pub fn in_dir(dir: &std::path::Path) -> Self {
        Self {
            json: Some(dir.join("report.json")),
            csv: Some(dir.join("trials.csv")),
            text: Some(dir.join("summary.txt")),
        }
    }
}

/// Full report as pretty JSON. Timings are left out so identical runs give
/// identical bytes.
pub fn report_json(report: &ExperimentReport) -> Result<String, HarnessError> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct CsvRow<'a> {
    index: usize,
    seed: u64,
    accepted: bool,
    reject_reason: String,
    statistic: Option<f64>,
    threshold: Option<f64>,
    test_loss: Option<f64>,
    test_loss_se: Option<f64>,
    opt_hat: f64,
    lambda_hat: f64,
    bound: f64,
    excess: Option<f64>,
    sound: Option<bool>,
    detail: &'a str,
}

impl<'a> From<&'a TrialRecord> for CsvRow<'a> {
    fn from(t: &'a TrialRecord) -> Self {
        Self {
            index: t.index,
            seed: t.seed,
            accepted: t.accepted,
            reject_reason: t.reject_reason.map(|r| format!("{r:?}")).unwrap_or_default(),
            statistic: t.statistic,
            threshold: t.threshold,
            test_loss: t.test_loss,
            test_loss_se: t.test_loss_se,
            opt_hat: t.opt_hat,
            lambda_hat: t.lambda_hat,
            bound: t.bound,
            excess: t.excess,
            sound: t.sound,
            detail: t.detail.as_deref().unwrap_or(""),
        }
    }
}

/// One row per trial, with a header even when there are no trials.
pub fn report_csv(report: &ExperimentReport) -> Result<String, HarnessError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record([
        "index",
        "seed",
        "accepted",
        "reject_reason",
        "statistic",
        "threshold",
        "test_loss",
        "test_loss_se",
        "opt_hat",
        "lambda_hat",
        "bound",
        "excess",
        "sound",
        "detail",
    ])?;
    for t in &report.trials {
        w.serialize(CsvRow::from(t))?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.4}"))
}

/// Human-readable summary, including wall-clock timings.
pub fn report_text(report: &ExperimentReport) -> String {
    let s = &report.summary;
    let cfg = &report.config;
    let mut out = String::new();
    let name = if cfg.name.is_empty() { "(unnamed)" } else { &cfg.name };
    let _ = writeln!(out, "experiment {name}: {} pipeline, seed {}", cfg.pipeline.name(), cfg.seed);
    let _ = writeln!(out, "trials       {}", s.n_trials);
    let _ = writeln!(out, "accepted     {} ({:.1}%)", s.n_accepted, 100.0 * s.accept_rate);
    for (reason, n) in &s.reject_counts {
        let _ = writeln!(out, "rejected     {n} x {reason}");
    }
    let _ = writeln!(out, "mean excess  {}", opt(s.mean_excess));
    let _ = writeln!(out, "p95 excess   {}", opt(s.p95_excess));
    let _ = writeln!(out, "unsound      {}", s.soundness_violations);
    if let Some(d) = &report.derived_bounds {
        let _ = writeln!(
            out,
            "derived      kernel {:?}, A = {:.3e}, B = {}",
            d.kernel.degree_vector,
            d.sup_bound,
            d.norm_bound.map_or_else(|| "n/a".into(), |b| format!("{b:.3e}"))
        );
    }
    let _ = writeln!(out, "wall clock   {:.3}s", report.elapsed.as_secs_f64());
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:>5} {:>8} {:>12} {:>12} {:>10} {:>10} {:>9}",
        "trial", "result", "statistic", "threshold", "loss", "bound", "time"
    );
    for t in &report.trials {
        let result = match t.reject_reason {
            None => "accept".to_string(),
            Some(r) => format!("{r:?}").chars().take(8).collect(),
        };
        let _ = writeln!(
            out,
            "{:>5} {:>8} {:>12} {:>12} {:>10} {:>10.4} {:>8.3}s",
            t.index,
            result,
            opt(t.statistic),
            opt(t.threshold),
            opt(t.test_loss),
            t.bound,
            t.elapsed.as_secs_f64()
        );
    }
    out
}

/// Writes every requested rendering of `report`.
pub fn emit_report(report: &ExperimentReport, paths: &ReportPaths) -> Result<(), HarnessError> {
    let write = |path: &PathBuf, body: &str| -> Result<(), HarnessError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, body)?;
        Ok(())
    };
    if let Some(p) = &paths.json {
        write(p, &report_json(report)?)?;
    }
    if let Some(p) = &paths.csv {
        write(p, &report_csv(report)?)?;
    }
    if let Some(p) = &paths.text {
        write(p, &report_text(report))?;
    }
    Ok(())
}
