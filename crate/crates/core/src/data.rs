//! Samples, datasets, the squared loss, label clipping and dataset files.
//!
//! Two on-disk formats are supported:
//!
//! - CSV: comma separated, period decimal point, one sample per row with
//!   columns `x1..xd[,y]`. A header row is optional and detected by a
//!   non-numeric first row; a header column named `y` marks the last column
//!   as the label. Headerless files are read as unlabeled unless the caller
//!   says otherwise through [`LoadOptions`].
//! - JSON lines: one `{"x":[...],"y":...}` object per line, `y` omitted for
//!   unlabeled samples.
//!
//! Writers emit the shortest representation that parses back to the same
//! `f64`, so `load(save(d)) == d` bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("dataset is empty")]
    Empty,
    #[error("dataset is unlabeled but labels are required")]
    Unlabeled,
    #[error("row {row}: expected {expected} features, found {found}")]
    DimensionMismatch { row: usize, expected: usize, found: usize },
    #[error("row {row}: non-finite value")]
    NonFinite { row: usize },
    #[error("row {row}: labeled dataset has a sample without a label")]
    MissingLabel { row: usize },
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("clip level must be positive, got {0}")]
    InvalidClipLevel(f64),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// A feature vector with an optional real label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
}

impl LabeledSample {
    pub fn labeled(x: Vec<f64>, y: f64) -> Self {
        Self { x, y: Some(y) }
    }

    pub fn unlabeled(x: Vec<f64>) -> Self {
        Self { x, y: None }
    }

    pub fn norm(&self) -> f64 {
        self.x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// A validated collection of samples of common dimension.
///
/// Invariants: every sample has `dim` finite features; when `labeled` every
/// sample carries a finite label, otherwise none does.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    dim: usize,
    labeled: bool,
    samples: Vec<LabeledSample>,
}

impl Dataset {
    pub fn new(dim: usize, labeled: bool, samples: Vec<LabeledSample>) -> Result<Self, DataError> {
        if dim == 0 {
            return Err(DataError::ZeroDimension);
        }
        for (row, s) in samples.iter().enumerate() {
            if s.x.len() != dim {
                return Err(DataError::DimensionMismatch { row, expected: dim, found: s.x.len() });
            }
            if s.x.iter().any(|v| !v.is_finite()) {
                return Err(DataError::NonFinite { row });
            }
            match (labeled, s.y) {
                (true, None) => return Err(DataError::MissingLabel { row }),
                (true, Some(y)) if !y.is_finite() => return Err(DataError::NonFinite { row }),
                _ => {}
            }
        }
        let samples =
            if labeled { samples } else { samples.into_iter().map(|s| LabeledSample::unlabeled(s.x)).collect() };
        Ok(Self { dim, labeled, samples })
    }

    pub fn unlabeled(dim: usize, xs: Vec<Vec<f64>>) -> Result<Self, DataError> {
        Self::new(dim, false, xs.into_iter().map(LabeledSample::unlabeled).collect())
    }

    pub fn labeled(dim: usize, xs: Vec<Vec<f64>>, ys: Vec<f64>) -> Result<Self, DataError> {
        if xs.len() != ys.len() {
            return Err(DataError::DimensionMismatch {
                row: xs.len().min(ys.len()),
                expected: xs.len(),
                found: ys.len(),
            });
        }
        Self::new(dim, true, xs.into_iter().zip(ys).map(|(x, y)| LabeledSample::labeled(x, y)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_labeled(&self) -> bool {
        self.labeled
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[LabeledSample] {
        &self.samples
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.samples.iter().map(|s| s.x.as_slice())
    }

    /// Labels in sample order; `None` for unlabeled sets.
    pub fn labels(&self) -> Option<Vec<f64>> {
        self.labeled.then(|| self.samples.iter().map(|s| s.y.unwrap_or_default()).collect())
    }

    /// Drops the labels.
    pub fn to_unlabeled(&self) -> Dataset {
        Dataset {
            dim: self.dim,
            labeled: false,
            samples: self.samples.iter().map(|s| LabeledSample::unlabeled(s.x.clone())).collect(),
        }
    }

    /// Concatenates two datasets of equal dimension; the result is labeled
    /// only when both inputs are.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset, DataError> {
        if self.dim != other.dim {
            return Err(DataError::DimensionMismatch { row: self.len(), expected: self.dim, found: other.dim });
        }
        let labeled = self.labeled && other.labeled;
        let samples = self
            .samples
            .iter()
            .chain(other.samples.iter())
            .map(|s| if labeled { s.clone() } else { LabeledSample::unlabeled(s.x.clone()) })
            .collect();
        Ok(Dataset { dim: self.dim, labeled, samples })
    }
}

/// `cl_M(t)`: `t` when `|t| <= m`, otherwise `m * sign(t)`.
pub fn clip(t: f64, m: f64) -> f64 {
    debug_assert!(m >= 0.0, "clip level must be nonnegative");
    t.clamp(-m, m)
}

/// Replaces each label `y` by `clip(y, m)`. Features are untouched.
pub fn clip_labels(data: &Dataset, m: f64) -> Result<Dataset, DataError> {
    if !data.labeled {
        return Err(DataError::Unlabeled);
    }
    if m.is_nan() || m <= 0.0 {
        return Err(DataError::InvalidClipLevel(m));
    }
    let samples = data.samples.iter().map(|s| LabeledSample { x: s.x.clone(), y: s.y.map(|y| clip(y, m)) }).collect();
    Ok(Dataset { dim: data.dim, labeled: true, samples })
}

/// Root mean squared error `sqrt(mean((y - h(x))^2))` of `h` on a labeled set.
pub fn squared_loss<H>(h: H, data: &Dataset) -> Result<f64, DataError>
where
    H: Fn(&[f64]) -> f64,
{
    if !data.labeled {
        return Err(DataError::Unlabeled);
    }
    if data.is_empty() {
        return Err(DataError::Empty);
    }
    let sum: f64 = data
        .samples
        .iter()
        .map(|s| {
            let r = s.y.unwrap_or_default() - h(&s.x);
            r * r
        })
        .sum();
    Ok((sum / data.len() as f64).sqrt())
}

/// Empirical `L2(S)` distance `sqrt(mean((f(x) - g(x))^2))` over the points of `data`.
pub fn empirical_distance<F, G>(f: F, g: G, data: &Dataset) -> Result<f64, DataError>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> f64,
{
    if data.is_empty() {
        return Err(DataError::Empty);
    }
    let sum: f64 = data
        .points()
        .map(|x| {
            let r = f(x) - g(x);
            r * r
        })
        .sum();
    Ok((sum / data.len() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetFormat {
    Csv,
    JsonLines,
}

impl DatasetFormat {
    /// Guesses the format from a file extension (`.csv`, `.jsonl`, `.ndjson`).
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(Self::Csv),
            "jsonl" | "ndjson" => Some(Self::JsonLines),
            _ => None,
        }
    }
}

/// Hints for formats that cannot describe themselves (headerless CSV).
#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Whether the last CSV column is a label. Ignored when a header is present.
    pub labeled: Option<bool>,
}

pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<Dataset, DataError> {
    load_dataset_with(path, format, LoadOptions::default())
}

pub fn load_dataset_with(path: &Path, format: DatasetFormat, opts: LoadOptions) -> Result<Dataset, DataError> {
    let file = File::open(path)?;
    match format {
        DatasetFormat::Csv => read_csv(BufReader::new(file), opts),
        DatasetFormat::JsonLines => read_json_lines(BufReader::new(file)),
    }
}

pub fn save_dataset(data: &Dataset, path: &Path, format: DatasetFormat) -> Result<(), DataError> {
    let mut out = BufWriter::new(File::create(path)?);
    match format {
        DatasetFormat::Csv => write_csv(data, &mut out)?,
        DatasetFormat::JsonLines => write_json_lines(data, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

pub fn write_csv<W: Write>(data: &Dataset, out: W) -> Result<(), DataError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let mut header: Vec<String> = (1..=data.dim).map(|i| format!("x{i}")).collect();
    if data.labeled {
        header.push("y".to_string());
    }
    w.write_record(&header)?;
    for s in &data.samples {
        let mut row: Vec<String> = s.x.iter().map(|v| fmt_f64(*v)).collect();
        if let Some(y) = s.y {
            row.push(fmt_f64(y));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R, opts: LoadOptions) -> Result<Dataset, DataError> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(input);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labeled = opts.labeled.unwrap_or(false);
    let mut width: Option<usize> = None;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        if i == 0 && rec.iter().any(|f| f.parse::<f64>().is_err()) {
            labeled = rec.iter().next_back().is_some_and(|f| f.eq_ignore_ascii_case("y"));
            width = Some(rec.len());
            continue;
        }
        let expected = *width.get_or_insert(rec.len());
        if rec.len() != expected {
            let feat = |n: usize| if labeled { n.saturating_sub(1) } else { n };
            return Err(DataError::DimensionMismatch {
                row: rows.len(),
                expected: feat(expected),
                found: feat(rec.len()),
            });
        }
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| DataError::Parse { line: i + 1, msg: format!("`{f}`: {e}") }))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    let width = width.ok_or(DataError::Empty)?;
    let dim = if labeled { width.saturating_sub(1) } else { width };
    let samples = rows
        .into_iter()
        .map(|mut r| {
            let y = if labeled { r.pop() } else { None };
            LabeledSample { x: r, y }
        })
        .collect();
    Dataset::new(dim, labeled, samples)
}

pub fn write_json_lines<W: Write>(data: &Dataset, mut out: W) -> Result<(), DataError> {
    for s in &data.samples {
        serde_json::to_writer(&mut out, s).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_json_lines<R: BufRead>(input: R) -> Result<Dataset, DataError> {
    let mut samples = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let s: LabeledSample =
            serde_json::from_str(&line).map_err(|e| DataError::Parse { line: i + 1, msg: e.to_string() })?;
        samples.push(s);
    }
    let first = samples.first().ok_or(DataError::Empty)?;
    let dim = first.x.len();
    let labeled = first.y.is_some();
    if let Some(row) = samples.iter().position(|s| s.y.is_some() != labeled) {
        return Err(DataError::MissingLabel { row });
    }
    Dataset::new(dim, labeled, samples)
}

fn fmt_f64(v: f64) -> String {
    // Debug output is the shortest string that round-trips.
    format!("{v:?}")
}
