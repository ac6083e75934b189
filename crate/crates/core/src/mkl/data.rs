use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub const DEFAULT_SPLIT_FRACTION: f64 = 0.8;

/// Binary classification data with a train/test split.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// One row per data point.
    pub features: DMatrix<f64>,
    /// `-1` or `+1` per row.
    pub labels: Vec<f64>,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub feature_names: Vec<String>,
}

/// Which CSV column holds the labels.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
    /// The rightmost column.
    #[default]
    Last,
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) if s == "last" => LabelColumn::Last,
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

impl Dataset {
    pub fn new(features: DMatrix<f64>, labels: Vec<f64>, train: Vec<usize>, test: Vec<usize>) -> Result<Self> {
        let n = features.nrows();
        if labels.len() != n {
            return Err(Error::dims("labels", n, labels.len()));
        }
        if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::Data("labels must be -1 or +1".into()));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("features".into()));
        }
        let mut seen = vec![false; n];
        for &i in train.iter().chain(&test) {
            if i >= n || seen[i] {
                return Err(Error::Data(format!("split index {i} is out of range or repeated")));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Data("split does not cover every row".into()));
        }
        let feature_names = (0..features.ncols()).map(|j| format!("x{j}")).collect();
        Ok(Self {
            features,
            labels,
            train,
            test,
            feature_names,
        })
    }

    /// Shuffles rows with `seed` and puts `round(N * fraction)` of them in
    /// the training split.
    pub fn with_random_split(features: DMatrix<f64>, labels: Vec<f64>, fraction: f64, seed: u64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "split fraction must lie in (0, 1], got {fraction}"
            )));
        }
        let n = features.nrows();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_train = ((n as f64) * fraction).round() as usize;
        let test = order.split_off(n_train.min(n));
        Self::new(features, labels, order, test)
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn train_labels(&self) -> Vec<f64> {
        self.train.iter().map(|&i| self.labels[i]).collect()
    }

    pub fn rows(&self, indices: &[usize]) -> DMatrix<f64> {
        self.features.select_rows(indices)
    }

    /// Standardizes every column with the mean and population standard
    /// deviation of the training rows. Columns that are constant over the
    /// training rows are dropped.
    pub fn standardize(&mut self) -> Result<()> {
        if self.train.is_empty() {
            return Err(Error::Data("cannot standardize without training rows".into()));
        }
        let nt = self.train.len() as f64;
        let mut keep = Vec::new();
        let mut stats = Vec::new();
        for j in 0..self.features.ncols() {
            let mean = self.train.iter().map(|&i| self.features[(i, j)]).sum::<f64>() / nt;
            let var = self
                .train
                .iter()
                .map(|&i| (self.features[(i, j)] - mean).powi(2))
                .sum::<f64>()
                / nt;
            let sd = var.sqrt();
            if sd > 1e-12 * mean.abs().max(1.0) {
                keep.push(j);
                stats.push((mean, sd));
            } else {
                log::warn!("dropping constant column '{}'", self.feature_names[j]);
            }
        }
        if keep.is_empty() {
            return Err(Error::Data("every feature column is constant".into()));
        }
        let mut out = self.features.select_columns(&keep);
        for (c, &(mean, sd)) in stats.iter().enumerate() {
            out.column_mut(c).apply(|v| *v = (*v - mean) / sd);
        }
        self.features = out;
        self.feature_names = keep.iter().map(|&j| self.feature_names[j].clone()).collect();
        Ok(())
    }
}

fn find_label_column(headers: &csv::StringRecord, label: &LabelColumn) -> Result<usize> {
    match label {
        LabelColumn::Index(i) if *i < headers.len() => Ok(*i),
        LabelColumn::Index(i) => Err(Error::Data(format!(
            "label column {i} out of range ({} columns)",
            headers.len()
        ))),
        LabelColumn::Name(name) => headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Data(format!("no column named '{name}'"))),
        LabelColumn::Last if headers.len() >= 2 => Ok(headers.len() - 1),
        LabelColumn::Last => Err(Error::Data(
            "need at least one feature column and a label column".into(),
        )),
    }
}

/// Maps exactly two distinct label strings to `-1` (the smaller) and `+1`.
/// Labels compare numerically when both parse as numbers.
fn map_labels(raw: &[String]) -> Result<Vec<f64>> {
    let mut distinct: Vec<&String> = Vec::new();
    for r in raw {
        if !distinct.contains(&r) {
            distinct.push(r);
            if distinct.len() > 2 {
                return Err(Error::Data(format!(
                    "labels are not binary: found at least '{}', '{}', '{}'",
                    distinct[0], distinct[1], distinct[2]
                )));
            }
        }
    }
    if distinct.len() != 2 {
        return Err(Error::Data("labels contain a single class".into()));
    }
    let (a, b) = (distinct[0], distinct[1]);
    let a_is_lower = match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x < y,
        _ => a < b,
    };
    let lower = if a_is_lower { a } else { b };
    Ok(raw.iter().map(|r| if r == lower { -1.0 } else { 1.0 }).collect())
}

/// Reads a comma-separated file with a header row, standardizes the
/// features and splits the rows.
pub fn load_csv_dataset(path: &Path, label: &LabelColumn, split_fraction: f64, seed: u64) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let label_idx = find_label_column(&headers, label)?;
    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != label_idx)
        .map(|(_, h)| h.to_string())
        .collect();
    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::Data(format!(
                "row {} has {} fields, expected {}",
                row + 1,
                record.len(),
                headers.len()
            )));
        }
        for (j, field) in record.iter().enumerate() {
            if j == label_idx {
                raw_labels.push(field.to_string());
            } else {
                let v: f64 = field.parse().map_err(|_| {
                    Error::Data(format!(
                        "row {}, column '{}': cannot parse '{field}'",
                        row + 1,
                        &headers[j]
                    ))
                })?;
                values.push(v);
            }
        }
    }
    if raw_labels.is_empty() {
        return Err(Error::Data("file has no data rows".into()));
    }
    let labels = map_labels(&raw_labels)?;
    let features = DMatrix::from_row_slice(raw_labels.len(), names.len(), &values);
    let mut data = Dataset::with_random_split(features, labels, split_fraction, seed)?;
    data.feature_names = names;
    data.standardize()?;
    Ok(data)
}

/// Writes features and labels as CSV with columns `x0, x1, ..., label`.
pub fn write_csv_dataset(path: &Path, features: &DMatrix<f64>, labels: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (0..features.ncols()).map(|j| format!("x{j}")).collect();
    header.push("label".into());
    w.write_record(&header)?;
    for (i, &y) in labels.iter().enumerate() {
        let mut row: Vec<String> = features.row(i).iter().map(|v| v.to_string()).collect();
        row.push((y as i64).to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Two Gaussian clouds in the plane centered at `(-offset, 0)` and
/// `(offset, 0)` with unit spread, clipped so that no point crosses the
/// `x = 0` line by less than `margin`. Half of the points carry each label.
pub fn two_blobs(points: usize, offset: f64, margin: f64, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = DMatrix::zeros(points, 2);
    let mut labels = Vec::with_capacity(points);
    for i in 0..points {
        let y = if i % 2 == 0 { 1.0 } else { -1.0 };
        let dx: f64 = rng.sample(StandardNormal);
        let dy: f64 = rng.sample(StandardNormal);
        let x = (offset + dx).max(margin);
        features[(i, 0)] = y * x;
        features[(i, 1)] = dy;
        labels.push(y);
    }
    (features, labels)
}
