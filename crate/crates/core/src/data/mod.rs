//! Dataset ingestion, feature scaling, seeded shuffling and synthetic
//! generators.
//!
//! A [`Dataset`] is an immutable row-major matrix of finite values with
//! optional integer ground-truth labels. Every transformation returns a new
//! dataset.
//!
//! All randomness in this module comes from ChaCha8 (`rand_chacha`) seeded
//! through `SeedableRng::seed_from_u64`, so generated data and shuffles are
//! reproducible across platforms for a given seed.

mod synthetic;

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use synthetic::{gaussian_blobs, generate, SyntheticKind, SyntheticSpec};

/// Errors raised while building, loading or generating datasets.
#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("non-numeric value {value:?} at line {line}, column {column}")]
    NonNumeric { line: u64, column: String, value: String },
    #[error("ragged row at line {line}: expected {expected} fields, found {found}")]
    Ragged { line: u64, expected: usize, found: usize },
    #[error("label column {0:?} not found")]
    MissingLabelColumn(String),
    #[error("dataset has no rows")]
    Empty,
    #[error("dataset has no feature columns")]
    NoFeatures,
    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },
    #[error("value count {len} is not a multiple of dimension {dim}")]
    Shape { len: usize, dim: usize },
    #[error("label count {labels} does not match row count {rows}")]
    LabelCount { labels: usize, rows: usize },
    #[error("{kind} needs at least {min} points, got {got}")]
    TooFewPoints {
        kind: SyntheticKind,
        min: usize,
        got: usize,
    },
    #[error("noise must be finite and nonnegative, got {0}")]
    InvalidNoise(f64),
    #[error("unknown scaler {0:?} (expected minmax, standard or none)")]
    UnknownScaler(String),
}

/// Feature scaling strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalerKind {
    /// Per-column `(x - min) / (max - min)`; constant columns map to 0.
    #[default]
    MinMax,
    /// Per-column `(x - mean) / stdev` with the population (1/N) stdev;
    /// zero-variance columns map to 0.
    Standard,
    /// Identity.
    None,
}

impl ScalerKind {
    pub const ALL: [ScalerKind; 3] = [ScalerKind::MinMax, ScalerKind::Standard, ScalerKind::None];

    pub fn as_str(self) -> &'static str {
        match self {
            ScalerKind::MinMax => "minmax",
            ScalerKind::Standard => "standard",
            ScalerKind::None => "none",
        }
    }
}

impl fmt::Display for ScalerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScalerKind {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "minmax" => Ok(ScalerKind::MinMax),
            "standard" => Ok(ScalerKind::Standard),
            "none" => Ok(ScalerKind::None),
            other => Err(DataError::UnknownScaler(other.to_string())),
        }
    }
}

/// Row-major `N x d` matrix of finite values with optional class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    dim: usize,
    labels: Option<Vec<i64>>,
    name: String,
    scaler: ScalerKind,
}

impl Dataset {
    /// Builds a dataset from row-major values.
    pub fn new(
        name: impl Into<String>,
        values: Vec<f64>,
        dim: usize,
        labels: Option<Vec<i64>>,
    ) -> Result<Self, DataError> {
        if dim == 0 {
            return Err(DataError::NoFeatures);
        }
        if !values.len().is_multiple_of(dim) {
            return Err(DataError::Shape { len: values.len(), dim });
        }
        let rows = values.len() / dim;
        if rows == 0 {
            return Err(DataError::Empty);
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(DataError::NonFinite {
                row: pos / dim,
                column: pos % dim,
            });
        }
        if let Some(l) = &labels {
            if l.len() != rows {
                return Err(DataError::LabelCount { labels: l.len(), rows });
            }
        }
        Ok(Self {
            values,
            dim,
            labels,
            name: name.into(),
            scaler: ScalerKind::None,
        })
    }

    /// Builds a dataset from a slice of rows.
    pub fn from_rows(name: impl Into<String>, rows: &[Vec<f64>], labels: Option<Vec<i64>>) -> Result<Self, DataError> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.is_empty() {
            return Err(DataError::Empty);
        }
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(DataError::Ragged {
                    line: i as u64 + 1,
                    expected: dim,
                    found: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(name, values, dim, labels)
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[i64]> {
        self.labels.as_deref()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn scaler_applied(&self) -> ScalerKind {
        self.scaler
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Drops ground-truth labels.
    pub fn without_labels(mut self) -> Self {
        self.labels = None;
        self
    }

    /// Per-column `(min, max)`.
    pub fn column_ranges(&self) -> Vec<(f64, f64)> {
        let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); self.dim];
        for row in self.rows() {
            for (r, &v) in ranges.iter_mut().zip(row) {
                r.0 = r.0.min(v);
                r.1 = r.1.max(v);
            }
        }
        ranges
    }

    /// Writes the dataset as CSV with columns `x0..x{d-1}` and, when labels
    /// are present, a trailing `label` column.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DataError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.dim).map(|j| format!("x{j}")).collect();
        if self.labels.is_some() {
            header.push("label".into());
        }
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(self.dim + 1);
        for (i, row) in self.rows().enumerate() {
            record.clear();
            record.extend(row.iter().map(|v| v.to_string()));
            if let Some(l) = &self.labels {
                record.push(l[i].to_string());
            }
            w.write_record(&record)?;
        }
        w.flush().map_err(|source| DataError::Io {
            path: "<writer>".into(),
            source,
        })?;
        Ok(())
    }
}

/// Loads a comma-separated file of numeric features.
///
/// The first row is treated as a header when any of its fields fails to
/// parse as a number. `label_column` selects the ground-truth column, either
/// by header name or by zero-based index.
pub fn load_dataset(path: impl AsRef<Path>, label_column: Option<&str>) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    parse_csv(file, name, label_column)
}

/// Parses CSV from any reader; see [`load_dataset`].
pub fn parse_csv<R: Read>(
    reader: R,
    name: impl Into<String>,
    label_column: Option<&str>,
) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let line = rec.position().map_or(0, |p| p.line());
        records.push((line, rec));
    }
    let Some((_, first)) = records.first() else {
        return Err(DataError::Empty);
    };
    let width = first.len();
    let header: Option<Vec<String>> = if first.iter().any(|f| f.parse::<f64>().is_err()) {
        Some(first.iter().map(str::to_string).collect())
    } else {
        None
    };
    let body = if header.is_some() { &records[1..] } else { &records[..] };
    if body.is_empty() {
        return Err(DataError::Empty);
    }

    let label_idx = match label_column {
        None => None,
        Some(sel) => Some(resolve_column(sel, header.as_deref(), width)?),
    };
    let dim = width - usize::from(label_idx.is_some());
    if dim == 0 {
        return Err(DataError::NoFeatures);
    }

    let column_name = |j: usize| match &header {
        Some(h) => format!("{} ({})", j + 1, h[j]),
        None => (j + 1).to_string(),
    };

    let mut values = Vec::with_capacity(body.len() * dim);
    let mut raw_labels = Vec::new();
    for (line, rec) in body {
        if rec.len() != width {
            return Err(DataError::Ragged {
                line: *line,
                expected: width,
                found: rec.len(),
            });
        }
        for (j, field) in rec.iter().enumerate() {
            if Some(j) == label_idx {
                raw_labels.push(field.to_string());
                continue;
            }
            let v: f64 = field.parse().map_err(|_| DataError::NonNumeric {
                line: *line,
                column: column_name(j),
                value: field.to_string(),
            })?;
            if !v.is_finite() {
                return Err(DataError::NonNumeric {
                    line: *line,
                    column: column_name(j),
                    value: field.to_string(),
                });
            }
            values.push(v);
        }
    }
    let labels = label_idx.map(|_| encode_labels(&raw_labels));
    Dataset::new(name, values, dim, labels)
}

fn resolve_column(sel: &str, header: Option<&[String]>, width: usize) -> Result<usize, DataError> {
    if let Some(h) = header {
        if let Some(j) = h.iter().position(|c| c == sel) {
            return Ok(j);
        }
    }
    match sel.parse::<usize>() {
        Ok(j) if j < width => Ok(j),
        _ => Err(DataError::MissingLabelColumn(sel.to_string())),
    }
}

/// Integer-valued labels are kept as-is; anything else is mapped to ids in
/// order of first appearance.
fn encode_labels(raw: &[String]) -> Vec<i64> {
    let numeric: Option<Vec<i64>> = raw
        .iter()
        .map(|s| {
            s.parse::<i64>().ok().or_else(|| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.fract() == 0.0 && v.abs() < 9.0e15)
                    .map(|v| v as i64)
            })
        })
        .collect();
    if let Some(labels) = numeric {
        return labels;
    }
    let mut ids: HashMap<&str, i64> = HashMap::new();
    raw.iter()
        .map(|s| {
            let next = ids.len() as i64;
            *ids.entry(s.as_str()).or_insert(next)
        })
        .collect()
}

/// Returns a rescaled copy of `ds`. Labels are preserved.
pub fn scale(ds: &Dataset, kind: ScalerKind) -> Dataset {
    let d = ds.dim;
    let n = ds.len() as f64;
    let mut values = ds.values.clone();
    match kind {
        ScalerKind::None => {}
        ScalerKind::MinMax => {
            let ranges = ds.column_ranges();
            for row in values.chunks_exact_mut(d) {
                for (v, &(lo, hi)) in row.iter_mut().zip(&ranges) {
                    let span = hi - lo;
                    *v = if span > 0.0 {
                        ((*v - lo) / span).clamp(0.0, 1.0)
                    } else {
                        0.0
                    };
                }
            }
        }
        ScalerKind::Standard => {
            let mut mean = vec![0.0; d];
            for row in ds.rows() {
                for (m, &v) in mean.iter_mut().zip(row) {
                    *m += v;
                }
            }
            mean.iter_mut().for_each(|m| *m /= n);
            let mut var = vec![0.0; d];
            for row in ds.rows() {
                for ((s, &v), &m) in var.iter_mut().zip(row).zip(&mean) {
                    *s += (v - m) * (v - m);
                }
            }
            let std: Vec<f64> = var.iter().map(|s| (s / n).sqrt()).collect();
            for row in values.chunks_exact_mut(d) {
                for ((v, &m), &sd) in row.iter_mut().zip(&mean).zip(&std) {
                    *v = if sd > 0.0 { (*v - m) / sd } else { 0.0 };
                }
            }
        }
    }
    Dataset {
        values,
        dim: d,
        labels: ds.labels.clone(),
        name: ds.name.clone(),
        scaler: kind,
    }
}

/// Permutes rows with a seeded shuffle and keeps at most `max_n` of them.
pub fn prepare(ds: &Dataset, shuffle_seed: u64, max_n: usize) -> Dataset {
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
    order.shuffle(&mut rng);
    order.truncate(max_n.max(1));
    select_rows(ds, &order)
}

/// Copies the given rows (in order) into a new dataset.
pub fn select_rows(ds: &Dataset, rows: &[usize]) -> Dataset {
    let mut values = Vec::with_capacity(rows.len() * ds.dim);
    for &i in rows {
        values.extend_from_slice(ds.row(i));
    }
    Dataset {
        values,
        dim: ds.dim,
        labels: ds.labels.as_ref().map(|l| rows.iter().map(|&i| l[i]).collect()),
        name: ds.name.clone(),
        scaler: ds.scaler,
    }
}
