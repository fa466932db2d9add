//! Sparse `label idx:val …` datasets, train/test splitting and a seeded
//! synthetic logistic-regression generator.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: cannot parse {token:?}: {reason}")]
    Parse { line: usize, token: String, reason: String },
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("split {split} of {rows} rows leaves an empty {side} set")]
    EmptySplit {
        split: f64,
        rows: usize,
        side: &'static str,
    },
    #[error("split fraction must lie in (0, 1), got {0}")]
    SplitFraction(f64),
}

/// Dense design matrix (one row per datum) with labels in `{0, 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: DMatrix<f64>,
    pub labels: DVector<f64>,
}

impl Dataset {
    pub fn rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn cols(&self) -> usize {
        self.features.ncols()
    }
}

fn parse_label(token: &str, line: usize) -> Result<f64, DatasetError> {
    let value: f64 = token
        .parse()
        .map_err(|e: std::num::ParseFloatError| DatasetError::Parse {
            line,
            token: token.to_string(),
            reason: e.to_string(),
        })?;
    if value == 1.0 {
        Ok(1.0)
    } else if value == 0.0 || value == -1.0 {
        Ok(0.0)
    } else {
        Err(DatasetError::Format {
            line,
            reason: format!("label {token} is not one of 0, 1, -1, +1"),
        })
    }
}

/// Parses sparse text. Blank lines are skipped; line numbers in errors are 1-based.
pub fn parse_sparse(text: &str) -> Result<Dataset, DatasetError> {
    let mut labels = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut width = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut tokens = raw.split_whitespace();
        let Some(label) = tokens.next() else { continue };
        labels.push(parse_label(label, line)?);
        let mut entries = Vec::new();
        let mut last = 0;
        for token in tokens {
            let parse_err = |reason: &str| DatasetError::Parse {
                line,
                token: token.to_string(),
                reason: reason.to_string(),
            };
            let (idx, val) = token.split_once(':').ok_or_else(|| parse_err("expected idx:val"))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err("index is not a nonnegative integer"))?;
            let val: f64 = val.parse().map_err(|_| parse_err("value is not a number"))?;
            if idx == 0 {
                return Err(DatasetError::Format {
                    line,
                    reason: "feature indices are 1-based; found 0".into(),
                });
            }
            if idx <= last {
                return Err(DatasetError::Format {
                    line,
                    reason: format!("feature index {idx} does not increase after {last}"),
                });
            }
            last = idx;
            entries.push((idx - 1, val));
        }
        width = width.max(last);
        rows.push(entries);
    }
    let mut features = DMatrix::zeros(rows.len(), width);
    for (r, entries) in rows.iter().enumerate() {
        for &(c, v) in entries {
            features[(r, c)] = v;
        }
    }
    Ok(Dataset {
        features,
        labels: DVector::from_vec(labels),
    })
}

pub fn load_sparse_dataset(path: &Path) -> Result<Dataset, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_sparse(&text)
}

/// Serializes to the sparse format. Zeros are omitted, except that the last
/// column is written on the first row when it would otherwise be invisible,
/// so that reloading recovers the same width.
pub fn write_sparse(data: &Dataset) -> String {
    let mut out = String::new();
    let width = data.cols();
    let last_col_empty = width > 0 && data.features.column(width - 1).iter().all(|&v| v == 0.0);
    for r in 0..data.rows() {
        let _ = write!(out, "{}", if data.labels[r] == 1.0 { 1 } else { 0 });
        for c in 0..width {
            let v = data.features[(r, c)];
            if v != 0.0 || (r == 0 && c == width - 1 && last_col_empty) {
                let _ = write!(out, " {}:{}", c + 1, v);
            }
        }
        out.push('\n');
    }
    out
}

fn select_rows(data: &Dataset, idx: &[usize]) -> Dataset {
    Dataset {
        features: data.features.select_rows(idx),
        labels: data.labels.select_rows(idx),
    }
}

/// Seeded shuffle, the first `⌈split · D⌉` rows for training, and optional
/// standardization with train-only statistics (population standard
/// deviation). Constant training columns are left untouched so that a bias
/// column survives.
pub fn split_standardize<R: Rng + ?Sized>(
    data: &Dataset,
    split: f64,
    rng: &mut R,
    standardize: bool,
) -> Result<(Dataset, Dataset), DatasetError> {
    if !(split > 0.0 && split < 1.0) {
        return Err(DatasetError::SplitFraction(split));
    }
    let rows = data.rows();
    let n_train = (split * rows as f64).ceil() as usize;
    if n_train == 0 {
        return Err(DatasetError::EmptySplit {
            split,
            rows,
            side: "train",
        });
    }
    if n_train >= rows {
        return Err(DatasetError::EmptySplit {
            split,
            rows,
            side: "test",
        });
    }
    let mut order: Vec<usize> = (0..rows).collect();
    order.shuffle(rng);
    let mut train = select_rows(data, &order[..n_train]);
    let mut test = select_rows(data, &order[n_train..]);

    if standardize {
        for c in 0..data.cols() {
            let col = train.features.column(c);
            let mean = col.mean();
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n_train as f64;
            let std = var.sqrt();
            if std <= 1e-12 * mean.abs().max(1.0) {
                continue;
            }
            for set in [&mut train, &mut test] {
                for v in set.features.column_mut(c).iter_mut() {
                    *v = (*v - mean) / std;
                }
            }
        }
    }
    Ok((train, test))
}

/// `rows × cols` standard-normal features with labels `1[w*ᵀx ≥ 0]` for a
/// standard-normal `w*`; the data are linearly separable by construction.
pub fn synthetic_separable<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> (Dataset, DVector<f64>) {
    let truth = DVector::from_fn(cols, |_, _| rng.sample::<f64, _>(StandardNormal));
    let features = DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal));
    let labels = (&features * &truth).map(|z| if z >= 0.0 { 1.0 } else { 0.0 });
    (Dataset { features, labels }, truth)
}
