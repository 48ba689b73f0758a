//! Soft-margin SVM classification on precomputed Gram matrices.
//!
//! The binary solver is SMO on the dual
//!
//! ```text
//! min_α ½ αᵀQα − 1ᵀα   s.t.  yᵀα = 0,  0 ≤ α_i ≤ C,   Q_ij = y_i y_j K_ij
//! ```
//!
//! Each step picks the maximal violating index `i` and the partner `j` with
//! the largest second-order decrease, then solves the two-variable
//! subproblem in closed form. Training stops once
//! `max_{I_up} −y_t G_t − min_{I_low} −y_t G_t < kkt_tolerance`; at that
//! point every sample satisfies its KKT condition within the tolerance.
//!
//! Multiclass problems use one-vs-one: one binary model per class pair,
//! trained on slices of a single shared Gram matrix, combined by voting.

use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::kernels::{self, KernelSpec};
use crate::seed;

/// Curvature floor for non-positive-definite pairs.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Soft-margin trade-off `C`; upper bound on every dual coefficient.
    pub trade_off: f64,
    #[serde(default = "default_kkt_tolerance")]
    pub kkt_tolerance: f64,
    /// Consecutive stalled steps tolerated before giving up.
    #[serde(default = "default_max_passes")]
    pub max_passes_without_progress: usize,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    /// Seeds the random partner choice used when a step stalls.
    #[serde(default)]
    pub seed: u64,
}

fn default_kkt_tolerance() -> f64 {
    1e-3
}

fn default_max_passes() -> usize {
    10
}

fn default_max_iterations() -> usize {
    100_000
}

impl TrainConfig {
    pub fn new(trade_off: f64) -> Self {
        Self {
            trade_off,
            kkt_tolerance: default_kkt_tolerance(),
            max_passes_without_progress: default_max_passes(),
            max_iterations: default_max_iterations(),
            seed: 0,
        }
    }

    pub fn with_trade_off(&self, trade_off: f64) -> Self {
        Self {
            trade_off,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.trade_off > 0.0 && self.trade_off.is_finite()) {
            return Err(Error::argument(format!(
                "trade-off C must be positive and finite, got {}",
                self.trade_off
            )));
        }
        if self.kkt_tolerance.is_nan() || self.kkt_tolerance <= 0.0 {
            return Err(Error::argument("kkt_tolerance must be positive"));
        }
        if self.max_iterations < 1 || self.max_passes_without_progress < 1 {
            return Err(Error::argument(
                "max_iterations and max_passes_without_progress must be >= 1",
            ));
        }
        Ok(())
    }
}

/// Trained binary SVM. Only coefficients with `α > 0` are stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvmModel {
    /// Indices into the training set the model was fitted on.
    pub support_indices: Vec<usize>,
    pub alphas: Vec<f64>,
    /// `±1` label of each support vector.
    pub signed_labels: Vec<f64>,
    pub bias: f64,
    pub trade_off: f64,
    pub converged: bool,
    /// Maximal KKT violation `m(α) − M(α)` when training stopped.
    pub kkt_violation: f64,
    pub iterations: usize,
    /// Dual objective `Σα − ½ αᵀQα` (maximization form).
    pub dual_objective: f64,
}

impl BinarySvmModel {
    pub fn support_count(&self) -> usize {
        self.support_indices.len()
    }

    /// `|Σ α_i y_i|`.
    pub fn equality_residual(&self) -> f64 {
        self.alphas
            .iter()
            .zip(&self.signed_labels)
            .map(|(a, y)| a * y)
            .sum::<f64>()
            .abs()
    }
}

fn check_square_symmetric(gram: ArrayView2<f64>) -> Result<()> {
    let n = gram.nrows();
    if gram.ncols() != n {
        return Err(Error::argument(format!(
            "gram matrix must be square, got {}x{}",
            n,
            gram.ncols()
        )));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (gram[[i, j]], gram[[j, i]]);
            if (a - b).abs() > 1e-9 * a.abs().max(b.abs()).max(1.0) {
                return Err(Error::argument(format!(
                    "gram matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    if gram.iter().any(|v| !v.is_finite()) {
        return Err(Error::argument("gram matrix has non-finite entries"));
    }
    Ok(())
}

/// Trains a binary soft-margin SVM with SMO.
///
/// `signed_labels` must be `±1` with both signs present. Hitting the
/// iteration cap or stalling is not an error: the model comes back with
/// `converged = false` and the achieved violation.
pub fn train_binary(
    gram: ArrayView2<f64>,
    signed_labels: &[f64],
    config: &TrainConfig,
) -> Result<BinarySvmModel> {
    config.validate()?;
    let n = signed_labels.len();
    if gram.nrows() != n {
        return Err(Error::argument(format!(
            "gram has {} rows but {n} labels were given",
            gram.nrows()
        )));
    }
    check_square_symmetric(gram)?;
    if signed_labels.iter().any(|&y| y != 1.0 && y != -1.0) {
        return Err(Error::argument("binary labels must be +1 or -1"));
    }
    let positives = signed_labels.iter().filter(|&&y| y > 0.0).count();
    if positives == 0 || positives == n {
        return Err(Error::argument(
            "binary training needs samples of both classes",
        ));
    }
    let gram = gram.as_standard_layout();
    Ok(Smo::new(gram.view(), signed_labels, config).solve())
}

struct Smo<'a> {
    k: ArrayView2<'a, f64>,
    y: &'a [f64],
    c: f64,
    alpha: Vec<f64>,
    /// Gradient of the minimization objective, `Qα − 1`.
    grad: Vec<f64>,
    config: &'a TrainConfig,
}

#[derive(Clone, Copy, PartialEq)]
enum Bound {
    Lower,
    Upper,
    Free,
}

impl<'a> Smo<'a> {
    fn new(k: ArrayView2<'a, f64>, y: &'a [f64], config: &'a TrainConfig) -> Self {
        let n = y.len();
        Self {
            k,
            y,
            c: config.trade_off,
            alpha: vec![0.0; n],
            grad: vec![-1.0; n],
            config,
        }
    }

    fn bound(&self, t: usize) -> Bound {
        if self.alpha[t] >= self.c {
            Bound::Upper
        } else if self.alpha[t] <= 0.0 {
            Bound::Lower
        } else {
            Bound::Free
        }
    }

    /// `α_t` can move in the direction that increases `y_t α_t`.
    fn in_up(&self, t: usize) -> bool {
        match self.bound(t) {
            Bound::Free => true,
            Bound::Lower => self.y[t] > 0.0,
            Bound::Upper => self.y[t] < 0.0,
        }
    }

    fn in_low(&self, t: usize) -> bool {
        match self.bound(t) {
            Bound::Free => true,
            Bound::Lower => self.y[t] < 0.0,
            Bound::Upper => self.y[t] > 0.0,
        }
    }

    /// Returns `(i, j, violation)`; `j` is `None` when no pair violates.
    fn select(&self) -> (usize, Option<usize>, f64) {
        let n = self.y.len();
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if self.in_up(t) {
                let v = -self.y[t] * self.grad[t];
                if v > gmax {
                    gmax = v;
                    i = t;
                }
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut best_j = None;
        let mut best_obj = f64::INFINITY;
        let k_i = self.k.row(i.min(n - 1));
        for t in 0..n {
            if !self.in_low(t) {
                continue;
            }
            let yg = self.y[t] * self.grad[t];
            if yg > gmax2 {
                gmax2 = yg;
            }
            if i == usize::MAX {
                continue;
            }
            let b = gmax + yg;
            if b > 0.0 {
                let a = k_i[i] + self.k[[t, t]] - 2.0 * k_i[t];
                let a = if a > 0.0 { a } else { TAU };
                let obj = -(b * b) / a;
                if obj < best_obj {
                    best_obj = obj;
                    best_j = Some(t);
                }
            }
        }
        (i, best_j, gmax + gmax2)
    }

    fn q(&self, s: usize, t: usize) -> f64 {
        self.y[s] * self.y[t] * self.k[[s, t]]
    }

    /// Solves the two-variable subproblem; returns the changes applied.
    fn step(&mut self, i: usize, j: usize) -> (f64, f64) {
        let c = self.c;
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let (qii, qjj, qij) = (self.q(i, i), self.q(j, j), self.q(i, j));
        let mut a_i = old_i;
        let mut a_j = old_j;
        let (g_i, g_j) = (self.grad[i], self.grad[j]);
        if self.y[i] != self.y[j] {
            let quad = qii + qjj + 2.0 * qij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (-g_i - g_j) / quad;
            let diff = a_i - a_j;
            a_i += delta;
            a_j += delta;
            if diff > 0.0 {
                if a_j < 0.0 {
                    a_j = 0.0;
                    a_i = diff;
                }
            } else if a_i < 0.0 {
                a_i = 0.0;
                a_j = -diff;
            }
            if diff > 0.0 {
                if a_i > c {
                    a_i = c;
                    a_j = c - diff;
                }
            } else if a_j > c {
                a_j = c;
                a_i = c + diff;
            }
        } else {
            let quad = qii + qjj - 2.0 * qij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (g_i - g_j) / quad;
            let sum = a_i + a_j;
            a_i -= delta;
            a_j += delta;
            if sum > c {
                if a_i > c {
                    a_i = c;
                    a_j = sum - c;
                }
            } else if a_j < 0.0 {
                a_j = 0.0;
                a_i = sum;
            }
            if sum > c {
                if a_j > c {
                    a_j = c;
                    a_i = sum - c;
                }
            } else if a_i < 0.0 {
                a_i = 0.0;
                a_j = sum;
            }
        }
        self.alpha[i] = a_i;
        self.alpha[j] = a_j;
        let (d_i, d_j) = (a_i - old_i, a_j - old_j);
        if d_i != 0.0 || d_j != 0.0 {
            let (row_i, row_j) = (self.k.row(i), self.k.row(j));
            let (yi_di, yj_dj) = (self.y[i] * d_i, self.y[j] * d_j);
            for (t, g) in self.grad.iter_mut().enumerate() {
                *g += self.y[t] * (row_i[t] * yi_di + row_j[t] * yj_dj);
            }
        }
        (d_i, d_j)
    }

    /// A random violating partner for `i`, used when the greedy pair stalls.
    fn random_partner<R: Rng>(&self, i: usize, rng: &mut R) -> Option<usize> {
        let gi = -self.y[i] * self.grad[i];
        let candidates: Vec<usize> = (0..self.y.len())
            .filter(|&t| t != i && self.in_low(t) && gi + self.y[t] * self.grad[t] > 0.0)
            .collect();
        if candidates.is_empty() {
            None
        } else {
            Some(candidates[rng.random_range(0..candidates.len())])
        }
    }

    fn solve(mut self) -> BinarySvmModel {
        let mut rng = seed::rng(self.config.seed);
        let mut iterations = 0;
        let mut stalled = 0;
        let mut converged = false;
        let mut violation;
        loop {
            let (i, j, gap) = self.select();
            violation = gap;
            // No partner with positive gain implies gap <= 0.
            if gap < self.config.kkt_tolerance || j.is_none() {
                converged = true;
                break;
            }
            if iterations >= self.config.max_iterations {
                break;
            }
            iterations += 1;
            let j = j.expect("checked above");
            let (d_i, d_j) = self.step(i, j);
            if d_i.abs() + d_j.abs() > 1e-15 * self.c {
                stalled = 0;
                continue;
            }
            stalled += 1;
            if stalled > self.config.max_passes_without_progress {
                break;
            }
            if let Some(jr) = self.random_partner(i, &mut rng) {
                self.step(i, jr);
            }
        }
        self.finish(converged, violation, iterations)
    }

    fn bias(&self) -> f64 {
        let mut ub = f64::INFINITY;
        let mut lb = f64::NEG_INFINITY;
        let mut free_sum = 0.0;
        let mut free_count = 0usize;
        for t in 0..self.y.len() {
            let yg = self.y[t] * self.grad[t];
            match self.bound(t) {
                Bound::Upper => {
                    if self.y[t] < 0.0 {
                        ub = ub.min(yg);
                    } else {
                        lb = lb.max(yg);
                    }
                }
                Bound::Lower => {
                    if self.y[t] > 0.0 {
                        ub = ub.min(yg);
                    } else {
                        lb = lb.max(yg);
                    }
                }
                Bound::Free => {
                    free_sum += yg;
                    free_count += 1;
                }
            }
        }
        let rho = if free_count > 0 {
            free_sum / free_count as f64
        } else if ub.is_finite() && lb.is_finite() {
            (ub + lb) / 2.0
        } else if ub.is_finite() {
            ub
        } else {
            lb
        };
        -rho
    }

    fn finish(self, converged: bool, violation: f64, iterations: usize) -> BinarySvmModel {
        let bias = self.bias();
        let objective_min: f64 = self
            .alpha
            .iter()
            .zip(&self.grad)
            .map(|(a, g)| a * (g - 1.0))
            .sum::<f64>()
            / 2.0;
        let mut support_indices = Vec::new();
        let mut alphas = Vec::new();
        let mut signed_labels = Vec::new();
        for (t, &a) in self.alpha.iter().enumerate() {
            if a > 0.0 {
                support_indices.push(t);
                alphas.push(a);
                signed_labels.push(self.y[t]);
            }
        }
        BinarySvmModel {
            support_indices,
            alphas,
            signed_labels,
            bias,
            trade_off: self.c,
            converged,
            kkt_violation: violation.max(0.0),
            iterations,
            dual_objective: -objective_min,
        }
    }
}

/// `f(x) = Σ α_i y_i K(x, x_i) + b` for each row of `cross_gram`, whose
/// columns are aligned with `model.support_indices`.
pub fn decision_values(model: &BinarySvmModel, cross_gram: ArrayView2<f64>) -> Result<Vec<f64>> {
    if cross_gram.ncols() != model.support_count() {
        return Err(Error::argument(format!(
            "cross gram has {} columns but the model has {} support vectors",
            cross_gram.ncols(),
            model.support_count()
        )));
    }
    let coef: Vec<f64> = model
        .alphas
        .iter()
        .zip(&model.signed_labels)
        .map(|(a, y)| a * y)
        .collect();
    Ok(cross_gram
        .rows()
        .into_iter()
        .map(|row| row.iter().zip(&coef).map(|(k, c)| k * c).sum::<f64>() + model.bias)
        .collect())
}

/// Decision values where `cross_gram` columns index the whole training set.
fn decision_values_indexed(model: &BinarySvmModel, cross_gram: ArrayView2<f64>) -> Vec<f64> {
    cross_gram
        .rows()
        .into_iter()
        .map(|row| {
            model
                .support_indices
                .iter()
                .zip(&model.alphas)
                .zip(&model.signed_labels)
                .map(|((&s, a), y)| a * y * row[s])
                .sum::<f64>()
                + model.bias
        })
        .collect()
}

/// One binary model of a one-vs-one ensemble. `positive < negative`; a
/// non-negative decision value votes for `positive`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseModel {
    pub positive: usize,
    pub negative: usize,
    pub model: BinarySvmModel,
}

/// One-vs-one ensemble whose support indices refer to the rows of the Gram
/// matrix it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseEnsemble {
    pub class_count: usize,
    pub pairs: Vec<PairwiseModel>,
}

impl PairwiseEnsemble {
    /// Trains all `C(C−1)/2` pairwise models from one precomputed Gram.
    pub fn train(
        gram: ArrayView2<f64>,
        labels: &[usize],
        class_count: usize,
        config: &TrainConfig,
    ) -> Result<Self> {
        config.validate()?;
        if gram.nrows() != labels.len() || gram.ncols() != labels.len() {
            return Err(Error::argument(format!(
                "gram is {}x{} but there are {} labels",
                gram.nrows(),
                gram.ncols(),
                labels.len()
            )));
        }
        if class_count < 2 {
            return Err(Error::argument("one-vs-one needs at least 2 classes"));
        }
        let mut members = vec![Vec::new(); class_count];
        for (i, &l) in labels.iter().enumerate() {
            if l >= class_count {
                return Err(Error::argument(format!(
                    "label {l} outside 0..{class_count}"
                )));
            }
            members[l].push(i);
        }
        if let Some(empty) = members.iter().position(Vec::is_empty) {
            return Err(Error::argument(format!(
                "class {empty} has no training samples"
            )));
        }
        let pair_list: Vec<(usize, usize)> = (0..class_count)
            .flat_map(|a| ((a + 1)..class_count).map(move |b| (a, b)))
            .collect();
        let pairs = pair_list
            .into_par_iter()
            .map(|(a, b)| {
                let mut idx: Vec<usize> = members[a].iter().chain(&members[b]).copied().collect();
                idx.sort_unstable();
                let y: Vec<f64> = idx
                    .iter()
                    .map(|&i| if labels[i] == a { 1.0 } else { -1.0 })
                    .collect();
                let sub = gram.select(Axis(0), &idx).select(Axis(1), &idx);
                let mut model = train_binary(sub.view(), &y, config)?;
                for s in &mut model.support_indices {
                    *s = idx[*s];
                }
                Ok(PairwiseModel {
                    positive: a,
                    negative: b,
                    model,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { class_count, pairs })
    }

    pub fn all_converged(&self) -> bool {
        self.pairs.iter().all(|p| p.model.converged)
    }

    /// Sorted union of support indices over all pairs.
    pub fn support_union(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self
            .pairs
            .iter()
            .flat_map(|p| p.model.support_indices.iter().copied())
            .collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    /// `n_test × pairs` decision values; `cross_gram` columns are the
    /// training rows the ensemble's support indices refer to.
    pub fn decisions(&self, cross_gram: ArrayView2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((cross_gram.nrows(), self.pairs.len()));
        for (p, pair) in self.pairs.iter().enumerate() {
            let f = decision_values_indexed(&pair.model, cross_gram);
            out.column_mut(p).assign(&ndarray::Array1::from(f));
        }
        out
    }

    pub fn predict_from_cross(&self, cross_gram: ArrayView2<f64>) -> Vec<usize> {
        let pairs: Vec<(usize, usize)> = self
            .pairs
            .iter()
            .map(|p| (p.positive, p.negative))
            .collect();
        self.decisions(cross_gram)
            .rows()
            .into_iter()
            .map(|row| vote(&pairs, row.as_slice().expect("row-major"), self.class_count))
            .collect()
    }
}

/// One-vs-one majority vote.
///
/// Each pair `(a, b)` votes for `a` when its decision value is `>= 0` and
/// for `b` otherwise. Ties go to the class with the largest summed `|f|` over
/// the votes it won, then to the smallest class id.
pub fn vote(pairs: &[(usize, usize)], decisions: &[f64], class_count: usize) -> usize {
    let mut votes = vec![0usize; class_count];
    let mut strength = vec![0.0f64; class_count];
    for (&(a, b), &f) in pairs.iter().zip(decisions) {
        let winner = if f >= 0.0 { a } else { b };
        votes[winner] += 1;
        strength[winner] += f.abs();
    }
    let mut best = 0;
    for c in 1..class_count {
        if votes[c] > votes[best] || (votes[c] == votes[best] && strength[c] > strength[best]) {
            best = c;
        }
    }
    best
}

/// Trained one-vs-one classifier with the kernel and support vectors needed
/// to predict on new data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassSvmModel {
    pub kernel: KernelSpec,
    pub band_count: usize,
    pub class_count: usize,
    /// Original class ids for reporting.
    pub class_ids: Vec<i64>,
    /// Training-set row of each retained support vector.
    pub support_rows: Vec<usize>,
    pub support_vectors: Array2<f64>,
    /// Support indices point into `support_vectors`.
    pub ensemble: PairwiseEnsemble,
}

/// Trains a one-vs-one SVM on `ds`, computing the full Gram once.
pub fn train_ovo(
    ds: &LabeledDataset,
    spec: &KernelSpec,
    config: &TrainConfig,
) -> Result<MulticlassSvmModel> {
    let gram = kernels::gram_symmetric(spec, ds.features().view())?;
    train_ovo_with_gram(ds, spec, gram.view(), config)
}

/// As [`train_ovo`] with a caller-supplied Gram of `ds` under `spec`.
pub fn train_ovo_with_gram(
    ds: &LabeledDataset,
    spec: &KernelSpec,
    gram: ArrayView2<f64>,
    config: &TrainConfig,
) -> Result<MulticlassSvmModel> {
    spec.validate(Some(ds.band_count()))?;
    let mut ensemble = PairwiseEnsemble::train(gram, ds.labels(), ds.class_count(), config)?;
    let support_rows = ensemble.support_union();
    for pair in &mut ensemble.pairs {
        for s in &mut pair.model.support_indices {
            *s = support_rows
                .binary_search(s)
                .expect("index is in the union");
        }
    }
    Ok(MulticlassSvmModel {
        kernel: spec.clone(),
        band_count: ds.band_count(),
        class_count: ds.class_count(),
        class_ids: ds.class_ids().to_vec(),
        support_vectors: ds.features().select(Axis(0), &support_rows),
        support_rows,
        ensemble,
    })
}

impl MulticlassSvmModel {
    pub fn all_converged(&self) -> bool {
        self.ensemble.all_converged()
    }

    /// Pairwise decision values, `n_test × C(C−1)/2`.
    pub fn decisions(&self, x_test: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x_test.ncols() != self.band_count {
            return Err(Error::argument(format!(
                "model expects {} bands, test data has {}",
                self.band_count,
                x_test.ncols()
            )));
        }
        let cross = kernels::gram(&self.kernel, x_test, self.support_vectors.view())?;
        Ok(self.ensemble.decisions(cross.view()))
    }

    /// Dense class label per test row.
    pub fn predict(&self, x_test: ArrayView2<f64>) -> Result<Vec<usize>> {
        if x_test.nrows() == 0 {
            return Ok(Vec::new());
        }
        if x_test.ncols() != self.band_count {
            return Err(Error::argument(format!(
                "model expects {} bands, test data has {}",
                self.band_count,
                x_test.ncols()
            )));
        }
        let cross = kernels::gram(&self.kernel, x_test, self.support_vectors.view())?;
        Ok(self.ensemble.predict_from_cross(cross.view()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        model.kernel.validate(Some(model.band_count))?;
        if model.support_vectors.nrows() != model.support_rows.len()
            || model.support_vectors.ncols() != model.band_count
        {
            return Err(Error::validation(
                "model support vectors have the wrong shape",
            ));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Convenience wrapper: [`MulticlassSvmModel::predict`].
pub fn predict(model: &MulticlassSvmModel, x_test: ArrayView2<f64>) -> Result<Vec<usize>> {
    model.predict(x_test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, SyntheticSpec};
    use ndarray::array;
    use proptest::prelude::*;

    fn config(c: f64) -> TrainConfig {
        TrainConfig::new(c)
    }

    #[test]
    fn two_point_analytic_solution() {
        let x = array![[-1.0], [1.0]];
        let k = kernels::gram_symmetric(&KernelSpec::Linear, x.view()).unwrap();
        let m = train_binary(k.view(), &[-1.0, 1.0], &config(10.0)).unwrap();
        assert!(m.converged);
        assert_eq!(m.support_indices, vec![0, 1]);
        for a in &m.alphas {
            assert!((a - 0.5).abs() < 1e-6);
        }
        assert!(m.bias.abs() < 1e-6);
        let probe = kernels::gram(&KernelSpec::Linear, array![[0.0]].view(), x.view()).unwrap();
        let f = decision_values(&m, probe.view()).unwrap();
        assert!(f[0].abs() < 1e-6);
        assert!((m.dual_objective - 0.5).abs() < 1e-9);
    }

    #[test]
    fn xor_with_rbf() {
        let x = array![[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]];
        let y = [-1.0, -1.0, 1.0, 1.0];
        let spec = KernelSpec::Rbf { gamma: 1.0 };
        let k = kernels::gram_symmetric(&spec, x.view()).unwrap();
        let m = train_binary(k.view(), &y, &config(100.0)).unwrap();
        let cross = k.select(Axis(1), &m.support_indices);
        let f = decision_values(&m, cross.view()).unwrap();
        for (fi, yi) in f.iter().zip(y) {
            assert!(fi * yi > 0.0);
        }
    }

    #[test]
    fn duplicated_data_gives_same_decision_function() {
        // Separable with margin, C large enough that no coefficient is bounded.
        let x = array![
            [0.0, 0.0],
            [0.2, 0.9],
            [1.0, 0.1],
            [2.0, 2.0],
            [2.5, 1.4],
            [1.8, 3.0]
        ];
        let y = [-1.0, -1.0, -1.0, 1.0, 1.0, 1.0];
        let spec = KernelSpec::Rbf { gamma: 0.5 };
        let mut cfg = config(1e4);
        cfg.kkt_tolerance = 1e-10;
        let k = kernels::gram_symmetric(&spec, x.view()).unwrap();
        let single = train_binary(k.view(), &y, &cfg).unwrap();
        assert!(single.alphas.iter().all(|&a| a < 1e4));

        let idx: Vec<usize> = (0..6).chain(0..6).collect();
        let x2 = x.select(Axis(0), &idx);
        let y2: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
        let k2 = kernels::gram_symmetric(&spec, x2.view()).unwrap();
        let double = train_binary(k2.view(), &y2, &cfg).unwrap();
        assert!(double.converged);

        let probes = array![[0.5, 0.5], [1.5, 1.5], [3.0, 0.0], [-1.0, 2.0], [1.0, 1.0]];
        let c1 = kernels::gram(
            &spec,
            probes.view(),
            x.select(Axis(0), &single.support_indices).view(),
        )
        .unwrap();
        let c2 = kernels::gram(
            &spec,
            probes.view(),
            x2.select(Axis(0), &double.support_indices).view(),
        )
        .unwrap();
        let f1 = decision_values(&single, c1.view()).unwrap();
        let f2 = decision_values(&double, c2.view()).unwrap();
        for (a, b) in f1.iter().zip(&f2) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let k = array![[1.0, 0.5], [0.5, 1.0]];
        assert!(matches!(
            train_binary(k.view(), &[1.0, 1.0], &config(1.0)),
            Err(Error::Argument(_))
        ));
        assert!(train_binary(k.view(), &[1.0, 0.0], &config(1.0)).is_err());
        assert!(train_binary(k.view(), &[1.0, -1.0, 1.0], &config(1.0)).is_err());
        assert!(train_binary(k.view(), &[1.0, -1.0], &config(0.0)).is_err());
        let asym = array![[1.0, 0.5], [0.1, 1.0]];
        assert!(train_binary(asym.view(), &[1.0, -1.0], &config(1.0)).is_err());
    }

    #[test]
    fn decision_values_shapes() {
        let x = array![[-1.0], [1.0]];
        let k = kernels::gram_symmetric(&KernelSpec::Linear, x.view()).unwrap();
        let m = train_binary(k.view(), &[-1.0, 1.0], &config(10.0)).unwrap();
        let empty = Array2::<f64>::zeros((0, 2));
        assert!(decision_values(&m, empty.view()).unwrap().is_empty());
        let wrong = Array2::<f64>::zeros((3, 1));
        assert!(decision_values(&m, wrong.view()).is_err());
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let spec = KernelSpec::Rbf { gamma: 0.05 };
        let ds = blobs(3, 30, 5.0, 9);
        let k = kernels::gram_symmetric(&spec, ds.features().view()).unwrap();
        let y: Vec<f64> = ds
            .labels()
            .iter()
            .map(|&l| if l == 0 { 1.0 } else { -1.0 })
            .collect();
        let mut cfg = config(1000.0);
        cfg.max_iterations = 2;
        cfg.kkt_tolerance = 1e-9;
        let m = train_binary(k.view(), &y, &cfg).unwrap();
        assert!(!m.converged);
        assert_eq!(m.iterations, 2);
        assert!(m.kkt_violation > cfg.kkt_tolerance);
    }

    fn blobs(classes: usize, per_class: usize, separation: f64, seed: u64) -> LabeledDataset {
        generate_synthetic(&SyntheticSpec {
            class_count: classes,
            samples_per_class: per_class,
            band_count: 8,
            spectral_smoothness: 0.5,
            class_separation: separation,
            noise_std: 0.2,
            seed,
        })
        .unwrap()
    }

    #[test]
    fn ovo_structure_and_training_accuracy() {
        let ds = blobs(3, 20, 3.0, 4);
        let spec = KernelSpec::Rbf { gamma: 0.1 };
        let model = train_ovo(&ds, &spec, &config(10.0)).unwrap();
        assert_eq!(model.ensemble.pairs.len(), 3);
        let pairs: Vec<(usize, usize)> = model
            .ensemble
            .pairs
            .iter()
            .map(|p| (p.positive, p.negative))
            .collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2), (1, 2)]);
        let pred = model.predict(ds.features().view()).unwrap();
        assert_eq!(pred, ds.labels());
        // Every support vector of pair (a, b) belongs to class a or b.
        for p in &model.ensemble.pairs {
            for &s in &p.model.support_indices {
                let label = ds.labels()[model.support_rows[s]];
                assert!(label == p.positive || label == p.negative);
            }
        }
    }

    #[test]
    fn two_class_ovo_matches_binary_sign() {
        let ds = blobs(2, 15, 1.0, 8);
        let spec = KernelSpec::Rbf { gamma: 0.3 };
        let model = train_ovo(&ds, &spec, &config(4.0)).unwrap();
        assert_eq!(model.ensemble.pairs.len(), 1);
        let d = model.decisions(ds.features().view()).unwrap();
        let pred = model.predict(ds.features().view()).unwrap();
        for (f, p) in d.column(0).iter().zip(&pred) {
            assert_eq!(*p, if *f >= 0.0 { 0 } else { 1 });
        }
    }

    #[test]
    fn predict_rejects_wrong_width() {
        let ds = blobs(2, 5, 3.0, 1);
        let model = train_ovo(&ds, &KernelSpec::Linear, &config(1.0)).unwrap();
        assert!(model.predict(Array2::zeros((2, 3)).view()).is_err());
        assert!(model
            .predict(Array2::zeros((0, 8)).view())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn cyclic_tie_uses_strength_then_id() {
        let pairs = [(0, 1), (0, 2), (1, 2)];
        // 0 beats 1, 2 beats 0, 1 beats 2: one vote each.
        assert_eq!(vote(&pairs, &[0.5, -2.0, 0.7], 3), 2);
        assert_eq!(vote(&pairs, &[3.0, -2.0, 0.7], 3), 0);
        assert_eq!(vote(&pairs, &[0.5, -0.5, 0.5], 3), 0);
        assert_eq!(vote(&pairs, &[0.5, -0.5, 0.5 + 1e-9], 3), 1);
        // reversed pair order in the slice must not change the outcome
        let rev = [(1, 2), (0, 2), (0, 1)];
        assert_eq!(vote(&rev, &[0.7, -2.0, 0.5], 3), 2);
        // clear majority
        assert_eq!(vote(&pairs, &[-1.0, 1.0, 1.0], 3), 1);
    }

    #[test]
    fn model_json_round_trip_predicts_identically() {
        let ds = blobs(3, 10, 2.0, 3);
        let spec = KernelSpec::Rrbf {
            gammas: (0..8).map(|i| 0.05 + 0.01 * i as f64).collect(),
        };
        let model = train_ovo(&ds, &spec, &config(8.0)).unwrap();
        let back = MulticlassSvmModel::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(back, model);
        let a = model.decisions(ds.features().view()).unwrap();
        let b = back.decisions(ds.features().view()).unwrap();
        assert!(a
            .iter()
            .zip(b.iter())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    fn check_kkt(k: &Array2<f64>, y: &[f64], m: &BinarySvmModel, tol: f64) {
        let n = y.len();
        let mut alpha = vec![0.0; n];
        for (&s, &a) in m.support_indices.iter().zip(&m.alphas) {
            alpha[s] = a;
        }
        for i in 0..n {
            let f: f64 = (0..n).map(|j| alpha[j] * y[j] * k[[i, j]]).sum::<f64>() + m.bias;
            let margin = y[i] * f;
            if alpha[i] <= 0.0 {
                assert!(margin >= 1.0 - tol, "alpha=0 margin {margin}");
            } else if alpha[i] >= m.trade_off {
                assert!(margin <= 1.0 + tol, "alpha=C margin {margin}");
            } else {
                assert!((margin - 1.0).abs() <= tol, "free margin {margin}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn dual_feasibility_and_kkt(seed in 0u64..10_000, c_exp in 0i32..11, gamma in 0.05f64..3.0) {
            let ds = blobs(2, 12, 0.7, seed);
            let spec = KernelSpec::Rbf { gamma };
            let k = kernels::gram_symmetric(&spec, ds.features().view()).unwrap();
            let y: Vec<f64> = ds.labels().iter().map(|&l| if l == 0 { 1.0 } else { -1.0 }).collect();
            let c = 2f64.powi(c_exp);
            let cfg = config(c);
            let m = train_binary(k.view(), &y, &cfg).unwrap();
            prop_assert!(m.converged);
            prop_assert!(m.alphas.iter().all(|&a| a > 0.0 && a <= c));
            let total: f64 = m.alphas.iter().sum();
            prop_assert!(m.equality_residual() <= 1e-6 * total.max(1.0));
            check_kkt(&k, &y, &m, cfg.kkt_tolerance);
        }

        #[test]
        fn label_flip_negates_decisions(seed in 0u64..10_000) {
            let ds = blobs(2, 6, 0.5, seed);
            let spec = KernelSpec::Rbf { gamma: 0.5 };
            let k = kernels::gram_symmetric(&spec, ds.features().view()).unwrap();
            let y: Vec<f64> = ds.labels().iter().map(|&l| if l == 0 { 1.0 } else { -1.0 }).collect();
            let neg: Vec<f64> = y.iter().map(|v| -v).collect();
            let mut cfg = config(5.0);
            cfg.kkt_tolerance = 1e-12;
            let a = train_binary(k.view(), &y, &cfg).unwrap();
            let b = train_binary(k.view(), &neg, &cfg).unwrap();
            let fa = decision_values_indexed(&a, k.view());
            let fb = decision_values_indexed(&b, k.view());
            for (x, z) in fa.iter().zip(&fb) {
                prop_assert!((x + z).abs() < 1e-9, "{} vs {}", x, z);
            }
        }
    }

    #[test]
    fn hard_margin_limit_separates() {
        let ds = blobs(2, 20, 3.0, 21);
        let spec = KernelSpec::Linear;
        let k = kernels::gram_symmetric(&spec, ds.features().view()).unwrap();
        let y: Vec<f64> = ds
            .labels()
            .iter()
            .map(|&l| if l == 0 { 1.0 } else { -1.0 })
            .collect();
        let m = train_binary(k.view(), &y, &config(1e6)).unwrap();
        let f = decision_values_indexed(&m, k.view());
        assert!(f.iter().zip(&y).all(|(f, y)| f * y > 0.0));
    }
}
