//! Dataset ingestion and preparation: CSV loading, min-max normalization
//! into the unit hypercube, and the stratified three-way split.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{FhError, Result};
use crate::seeding::derive_seed;

/// Per-column affine parameters fitted on the training split. Applying
/// them maps any row into [0,1]^n (out-of-range values are clipped).
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl Normalization {
    /// Normalizes one raw value from column `d`. Constant training
    /// columns (max == min) map everything to the midpoint.
    pub fn apply_value(&self, d: usize, v: f64) -> f64 {
        let (lo, hi) = (self.mins[d], self.maxs[d]);
        if hi > lo {
            ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
        } else {
            0.5
        }
    }

    /// Normalizes a row in place.
    pub fn apply_row(&self, row: &mut [f64]) {
        assert_eq!(row.len(), self.mins.len(), "row width mismatch");
        for (d, v) in row.iter_mut().enumerate() {
            *v = self.apply_value(d, *v);
        }
    }
}

/// A labeled sample matrix, row-major. Labels are dense ids 0..L-1 in
/// first-appearance order of the raw label strings. `norm` is present
/// once the features have been normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub x: Vec<f64>,
    pub n_features: usize,
    pub y: Vec<usize>,
    pub norm: Option<Normalization>,
}

impl Dataset {
    pub fn new(name: String, x: Vec<f64>, n_features: usize, y: Vec<usize>) -> Self {
        assert!(n_features >= 1, "need at least one feature");
        assert_eq!(x.len(), y.len() * n_features, "sample matrix shape mismatch");
        Self {
            name,
            x,
            n_features,
            y,
            norm: None,
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.x[r * self.n_features..(r + 1) * self.n_features]
    }

    pub fn n_classes(&self) -> usize {
        self.y.iter().copied().max().map_or(0, |m| m + 1)
    }

    /// Copies the given rows into a fresh (x, y) pair, preserving order.
    pub fn subset(&self, rows: &[usize]) -> (Vec<f64>, Vec<usize>) {
        let mut x = Vec::with_capacity(rows.len() * self.n_features);
        let mut y = Vec::with_capacity(rows.len());
        for &r in rows {
            x.extend_from_slice(self.row(r));
            y.push(self.y[r]);
        }
        (x, y)
    }
}

/// Loads a CSV with a header row; every column but the last is a numeric
/// feature and the last is the label (numeric or string). Labels are
/// remapped to dense ids in first-appearance order. Any unparsable or
/// non-finite feature cell rejects the whole file with its row number
/// (1-based over data rows).
pub fn load_csv(path: &Path) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let width = reader.headers()?.len();
    if width < 2 {
        return Err(FhError::BadRow {
            row: 0,
            msg: format!("need at least one feature column and a label column, header has {width}"),
        });
    }
    let n_features = width - 1;

    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut label_ids: HashMap<String, usize> = HashMap::new();
    for (i, record) in reader.records().enumerate() {
        let row = (i + 1) as u64;
        let record = record?;
        if record.len() != width {
            return Err(FhError::BadRow {
                row,
                msg: format!("expected {width} columns, got {}", record.len()),
            });
        }
        for cell in record.iter().take(n_features) {
            let v: f64 = cell.parse().map_err(|_| FhError::BadRow {
                row,
                msg: format!("feature cell '{cell}' is not numeric"),
            })?;
            if !v.is_finite() {
                return Err(FhError::BadRow {
                    row,
                    msg: format!("feature cell '{cell}' is not finite"),
                });
            }
            x.push(v);
        }
        let label = record.get(n_features).unwrap_or("");
        if label.is_empty() {
            return Err(FhError::BadRow {
                row,
                msg: "empty label cell".into(),
            });
        }
        let next = label_ids.len();
        y.push(*label_ids.entry(label.to_string()).or_insert(next));
    }
    if y.is_empty() {
        return Err(FhError::EmptyDataset);
    }
    if label_ids.len() < 2 {
        return Err(FhError::SingleClass);
    }

    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    Ok(Dataset::new(name, x, n_features, y))
}

/// Loads an unlabeled numeric matrix for prediction. The file may carry
/// either exactly `n` columns or `n + 1` (a trailing label column, which
/// is ignored).
pub fn load_features(path: &Path, n: usize) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let width = reader.headers()?.len();
    if width != n && width != n + 1 {
        return Err(FhError::BadRow {
            row: 0,
            msg: format!("model expects {n} features; file has {width} columns"),
        });
    }
    let mut x = Vec::new();
    let mut rows = 0u64;
    for (i, record) in reader.records().enumerate() {
        let row = (i + 1) as u64;
        let record = record?;
        if record.len() != width {
            return Err(FhError::BadRow {
                row,
                msg: format!("expected {width} columns, got {}", record.len()),
            });
        }
        for cell in record.iter().take(n) {
            let v: f64 = cell.parse().map_err(|_| FhError::BadRow {
                row,
                msg: format!("feature cell '{cell}' is not numeric"),
            })?;
            if !v.is_finite() {
                return Err(FhError::BadRow {
                    row,
                    msg: format!("feature cell '{cell}' is not finite"),
                });
            }
            x.push(v);
        }
        rows = row;
    }
    if rows == 0 {
        return Err(FhError::EmptyDataset);
    }
    Ok(x)
}

/// Fits min-max parameters on `fit_rows` only and applies them to every
/// row, returning a normalized copy of the dataset. Values outside the
/// fitted range clip to [0,1]; columns constant on `fit_rows` map to 0.5.
pub fn normalize(ds: &Dataset, fit_rows: &[usize]) -> Dataset {
    assert!(!fit_rows.is_empty(), "normalization needs at least one fit row");
    let n = ds.n_features;
    let mut mins = vec![f64::INFINITY; n];
    let mut maxs = vec![f64::NEG_INFINITY; n];
    for &r in fit_rows {
        let row = ds.row(r);
        for d in 0..n {
            mins[d] = mins[d].min(row[d]);
            maxs[d] = maxs[d].max(row[d]);
        }
    }
    let norm = Normalization { mins, maxs };
    let mut x = ds.x.clone();
    for row in x.chunks_mut(n) {
        norm.apply_row(row);
    }
    Dataset {
        name: ds.name.clone(),
        x,
        n_features: n,
        y: ds.y.clone(),
        norm: Some(norm),
    }
}

const MIN_CLASS_SIZE: usize = 4;

/// Splits row indices into (train, dsel, test) preserving class
/// proportions. Each class is shuffled independently (streams derived
/// from `seed`) and allocated proportionally; leftover rows go to the
/// largest-fraction part first. The three parts are disjoint, exhaustive,
/// and returned sorted.
pub fn stratified_split(
    ds: &Dataset,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let f = [fractions.0, fractions.1, fractions.2];
    if f.iter().any(|&v| !(0.0..=1.0).contains(&v)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(FhError::InvalidParameter(format!(
            "split fractions must be nonnegative and sum to 1, got {f:?}"
        )));
    }
    if ds.is_empty() {
        return Err(FhError::EmptyDataset);
    }

    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.n_classes()];
    for (r, &label) in ds.y.iter().enumerate() {
        by_class[label].push(r);
    }

    // remainder order: largest fraction first, ties toward train/dsel/test
    let mut part_order = [0usize, 1, 2];
    part_order.sort_by(|&a, &b| f[b].total_cmp(&f[a]).then(a.cmp(&b)));

    let mut parts: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (class, rows) in by_class.iter().enumerate() {
        if rows.len() < MIN_CLASS_SIZE {
            return Err(FhError::ClassTooSmall {
                class,
                count: rows.len(),
                min: MIN_CLASS_SIZE,
            });
        }
        let mut shuffled = rows.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, class as u64));
        shuffled.shuffle(&mut rng);

        let c = shuffled.len();
        let mut take = [0usize; 3];
        for p in 0..3 {
            take[p] = (c as f64 * f[p]).floor() as usize;
        }
        let mut leftover = c - take.iter().sum::<usize>();
        let mut cursor = 0;
        while leftover > 0 {
            take[part_order[cursor % 3]] += 1;
            cursor += 1;
            leftover -= 1;
        }
        let mut offset = 0;
        for p in 0..3 {
            parts[p].extend_from_slice(&shuffled[offset..offset + take[p]]);
            offset += take[p];
        }
    }
    for p in parts.iter_mut() {
        p.sort_unstable();
    }
    let [train, dsel, test] = parts;
    Ok((train, dsel, test))
}
