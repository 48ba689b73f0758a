//! Labeled feature matrices: loading, validation, subsampling, synthesis and
//! standardization.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Bands whose sample std falls below this are treated as constant.
pub const CONSTANT_BAND_STD: f64 = 1e-12;

/// `N × d` features with dense class labels `0..C`.
///
/// Labels read from files are densified in order of first appearance; the
/// original ids are kept in [`LabeledDataset::class_ids`] for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    features: Array2<f64>,
    labels: Vec<usize>,
    class_count: usize,
    class_ids: Vec<i64>,
}

impl LabeledDataset {
    /// Builds a dataset from dense labels. `class_count` is `max(label) + 1`
    /// and every class in `0..class_count` must occur.
    pub fn new(features: Array2<f64>, labels: Vec<usize>) -> Result<Self> {
        let class_count = labels.iter().max().map_or(0, |&m| m + 1);
        let class_ids = (0..class_count as i64).collect();
        Self::with_class_ids(features, labels, class_ids)
    }

    /// Builds a dataset from arbitrary integer labels, densifying them in
    /// order of first appearance.
    pub fn from_original_labels(features: Array2<f64>, original: &[i64]) -> Result<Self> {
        let mut class_ids: Vec<i64> = Vec::new();
        let labels = original
            .iter()
            .map(|id| match class_ids.iter().position(|c| c == id) {
                Some(pos) => pos,
                None => {
                    class_ids.push(*id);
                    class_ids.len() - 1
                }
            })
            .collect();
        Self::with_class_ids(features, labels, class_ids)
    }

    /// Builds a dataset with an explicit dense→original id map.
    pub fn with_class_ids(
        features: Array2<f64>,
        labels: Vec<usize>,
        class_ids: Vec<i64>,
    ) -> Result<Self> {
        let class_count = class_ids.len();
        if features.nrows() != labels.len() {
            return Err(Error::validation(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if features.nrows() < 2 {
            return Err(Error::validation("a dataset needs at least 2 samples"));
        }
        if features.ncols() < 1 {
            return Err(Error::validation("a dataset needs at least 1 band"));
        }
        if class_count < 2 {
            return Err(Error::validation(format!(
                "a dataset needs at least 2 classes, found {class_count}"
            )));
        }
        if let Some((row, col)) = features
            .indexed_iter()
            .find(|(_, v)| !v.is_finite())
            .map(|(ix, _)| ix)
        {
            return Err(Error::validation(format!(
                "non-finite value at sample {row}, band {col}"
            )));
        }
        let mut seen = vec![false; class_count];
        for &label in &labels {
            if label >= class_count {
                return Err(Error::validation(format!(
                    "label {label} outside 0..{class_count}"
                )));
            }
            seen[label] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::validation(format!(
                "class {missing} (original id {}) has no samples",
                class_ids[missing]
            )));
        }
        Ok(Self {
            features,
            labels,
            class_count,
            class_ids,
        })
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn sample_count(&self) -> usize {
        self.labels.len()
    }

    pub fn band_count(&self) -> usize {
        self.features.ncols()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    /// Original class id for each dense label.
    pub fn class_ids(&self) -> &[i64] {
        &self.class_ids
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.row(i)
    }

    /// Sample indices grouped by dense class label, ascending within a class.
    pub fn class_indices(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.class_count];
        for (i, &label) in self.labels.iter().enumerate() {
            groups[label].push(i);
        }
        groups
    }

    /// Rows at `indices`, in that order. The class map is kept, so every class
    /// must still be represented.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let features = self.features.select(Axis(0), indices);
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Self::with_class_ids(features, labels, self.class_ids.clone())
    }

    /// Same labels, new features (must have the same number of rows).
    pub fn with_features(&self, features: Array2<f64>) -> Result<Self> {
        Self::with_class_ids(features, self.labels.clone(), self.class_ids.clone())
    }
}

/// Loads a headerless CSV: `d` numeric fields then one integer label per line.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file).map_err(|e| match e {
        Error::Parse { line, message, .. } => Error::Parse {
            path: Some(path.to_path_buf()),
            line,
            message,
        },
        other => other,
    })
}

/// Parses the dataset CSV contract from any reader.
pub fn read_dataset<R: Read>(reader: R) -> Result<LabeledDataset> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut values: Vec<f64> = Vec::new();
    let mut labels: Vec<i64> = Vec::new();
    let mut width: Option<usize> = None;
    for record in csv.records() {
        let record = record.map_err(|e| Error::Parse {
            path: None,
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let parse_err = |message: String| Error::Parse {
            path: None,
            line,
            message,
        };
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        if record.len() < 2 {
            return Err(parse_err(format!(
                "expected at least one band and a label, found {} field(s)",
                record.len()
            )));
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(parse_err(format!(
                    "row has {} fields, expected {} ({} bands + label)",
                    record.len(),
                    w,
                    w - 1
                )))
            }
            Some(_) => {}
        }
        let band_fields = record.len() - 1;
        for (col, field) in record.iter().take(band_fields).enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(format!("band {col}: '{field}' is not a number")))?;
            values.push(v);
        }
        let label_field = &record[band_fields];
        let label: i64 = label_field
            .parse()
            .map_err(|_| parse_err(format!("label '{label_field}' is not an integer")))?;
        labels.push(label);
    }
    let width = width.ok_or_else(|| Error::validation("dataset file contains no samples"))?;
    let features = Array2::from_shape_vec((labels.len(), width - 1), values)
        .expect("row widths checked while parsing");
    LabeledDataset::from_original_labels(features, &labels)
}

/// Writes the dataset in the format [`load_dataset`] reads, using original
/// class ids. Values are printed in shortest round-trip form.
pub fn write_dataset(ds: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut line = String::new();
    for (row, &label) in ds.features.rows().into_iter().zip(&ds.labels) {
        line.clear();
        for v in row {
            line.push_str(&v.to_string());
            line.push(',');
        }
        line.push_str(&ds.class_ids[label].to_string());
        line.push('\n');
        out.write_all(line.as_bytes())
            .map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Number of samples kept from a class of `class_size` at `fraction`:
/// round-half-up with a floor of one.
pub fn subsample_count(class_size: usize, fraction: f64) -> usize {
    // The epsilon keeps products such as 0.35 * 10 from rounding down.
    let rounded = (fraction * class_size as f64 + 0.5 + 1e-9).floor() as usize;
    rounded.clamp(1, class_size)
}

/// Draws `subsample_count(n_c, fraction)` samples per class uniformly without
/// replacement. Selected rows keep their original relative order, so
/// `fraction = 1.0` returns an identical copy.
pub fn stratified_subsample(
    ds: &LabeledDataset,
    fraction: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::argument(format!(
            "subsample fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let mut rng = seed::rng(seed);
    let mut chosen = Vec::new();
    for mut members in ds.class_indices() {
        let keep = subsample_count(members.len(), fraction);
        members.shuffle(&mut rng);
        chosen.extend_from_slice(&members[..keep]);
    }
    chosen.sort_unstable();
    ds.select(&chosen)
}

/// Splits each class into a training part of `subsample_count(n_c,
/// train_fraction)` samples and a test part with the rest. Every class needs
/// at least two samples so both parts are non-empty.
pub fn stratified_split(
    ds: &LabeledDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::argument(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut rng = seed::rng(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class, mut members) in ds.class_indices().into_iter().enumerate() {
        if members.len() < 2 {
            return Err(Error::validation(format!(
                "class {} has {} sample(s); a train/test split needs 2",
                ds.class_ids[class],
                members.len()
            )));
        }
        let keep = subsample_count(members.len(), train_fraction).min(members.len() - 1);
        members.shuffle(&mut rng);
        train.extend_from_slice(&members[..keep]);
        test.extend_from_slice(&members[keep..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((ds.select(&train)?, ds.select(&test)?))
}

/// Parameters of the synthetic spectral generator.
///
/// Class mean spectra and per-sample noise are both stationary AR(1)
/// sequences over the band index with coefficient `spectral_smoothness`, so
/// neighbouring bands carry similar information.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub class_count: usize,
    pub samples_per_class: usize,
    pub band_count: usize,
    pub spectral_smoothness: f64,
    pub class_separation: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.class_count < 2 {
            return Err(Error::argument("synthetic class_count must be >= 2"));
        }
        if self.band_count < 2 {
            return Err(Error::argument("synthetic band_count must be >= 2"));
        }
        if self.samples_per_class < 1 {
            return Err(Error::argument("synthetic samples_per_class must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.spectral_smoothness) {
            return Err(Error::argument(format!(
                "spectral_smoothness must lie in [0, 1), got {}",
                self.spectral_smoothness
            )));
        }
        if !(self.noise_std > 0.0 && self.noise_std.is_finite()) {
            return Err(Error::argument("noise_std must be positive"));
        }
        if !self.class_separation.is_finite() {
            return Err(Error::argument("class_separation must be finite"));
        }
        Ok(())
    }
}

fn ar1_series<R: Rng>(rng: &mut R, len: usize, rho: f64, scale: f64) -> Array1<f64> {
    let innovation = (1.0 - rho * rho).sqrt();
    let mut out = Array1::zeros(len);
    let mut prev: f64 = rng.sample(StandardNormal);
    out[0] = prev;
    for b in 1..len {
        let eps: f64 = rng.sample(StandardNormal);
        prev = rho * prev + innovation * eps;
        out[b] = prev;
    }
    out * scale
}

/// Samples a dataset from `spec`. Rows are grouped by class. Pure function
/// of `spec`, seed included.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let mut rng = seed::rng(spec.seed);
    let d = spec.band_count;
    let rho = spec.spectral_smoothness;
    let means: Vec<Array1<f64>> = (0..spec.class_count)
        .map(|_| ar1_series(&mut rng, d, rho, spec.class_separation))
        .collect();
    let n = spec.class_count * spec.samples_per_class;
    let mut features = Array2::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    for (class, mean) in means.iter().enumerate() {
        for s in 0..spec.samples_per_class {
            let noise = ar1_series(&mut rng, d, rho, spec.noise_std);
            features
                .row_mut(class * spec.samples_per_class + s)
                .assign(&(mean + &noise));
            labels.push(class);
        }
    }
    LabeledDataset::new(features, labels)
}

/// Per-band affine transform `(x - mean) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardizer {
    /// Column means and sample stds (`n - 1`). Constant columns get scale 1.
    pub fn fit(features: &Array2<f64>) -> Self {
        let n = features.nrows() as f64;
        let mut means = Vec::with_capacity(features.ncols());
        let mut scales = Vec::with_capacity(features.ncols());
        for col in features.columns() {
            let mean = col.sum() / n;
            let var = if n > 1.0 {
                col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            let std = var.sqrt();
            means.push(mean);
            scales.push(if std < CONSTANT_BAND_STD { 1.0 } else { std });
        }
        Self { means, scales }
    }

    pub fn transform(&self, features: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_width(features)?;
        let mut out = features.clone();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            let (m, s) = (self.means[j], self.scales[j]);
            col.mapv_inplace(|v| (v - m) / s);
        }
        Ok(out)
    }

    pub fn inverse_transform(&self, features: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_width(features)?;
        let mut out = features.clone();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            let (m, s) = (self.means[j], self.scales[j]);
            col.mapv_inplace(|v| v * s + m);
        }
        Ok(out)
    }

    pub fn apply(&self, ds: &LabeledDataset) -> Result<LabeledDataset> {
        ds.with_features(self.transform(ds.features())?)
    }

    fn check_width(&self, features: &Array2<f64>) -> Result<()> {
        if features.ncols() != self.means.len() {
            return Err(Error::argument(format!(
                "standardizer fitted on {} bands, data has {}",
                self.means.len(),
                features.ncols()
            )));
        }
        Ok(())
    }
}

/// Z-scores every band; returns the fitted transform for test data.
pub fn standardize(ds: &LabeledDataset) -> (LabeledDataset, Standardizer) {
    let transform = Standardizer::fit(ds.features());
    let out = transform.apply(ds).expect("transform fitted on ds");
    (out, transform)
}
