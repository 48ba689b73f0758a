//! Stratified k-fold cross-validation, exhaustive grid search, repeated
//! random-kernel trials and training-fraction sweeps.
//!
//! Every random choice is keyed by a seed derived from a base seed and the
//! position of the task (cluster count, repeat, fraction), so results do not
//! depend on scheduling and any single trial can be replayed in isolation.

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::band_clustering::cluster_bands;
use crate::dataset::{stratified_subsample, LabeledDataset};
use crate::error::{Error, Result};
use crate::kernels::{self, sample_crrbf, sample_rrbf, GammaSampler, KernelFamily, KernelSpec};
use crate::metrics::{self, cohen_kappa, confusion, overall_accuracy, trial_stats, TrialStats};
use crate::seed;
use crate::svm::{PairwiseEnsemble, TrainConfig};

/// `{1, 2, 4, …, 1024}`.
pub fn default_trade_offs() -> Vec<f64> {
    (0..=10).map(|e| f64::from(1u32 << e)).collect()
}

/// RBF bandwidth grid read as `0.01, 1.01, …, 19.01` plus the endpoint 20.
pub fn default_rbf_gammas() -> Vec<f64> {
    let mut g: Vec<f64> = (0..20).map(|i| 0.01 + f64::from(i)).collect();
    g.push(20.0);
    g
}

/// Polynomial degrees `1..=10`.
pub fn default_polynomial_degrees() -> Vec<u32> {
    (1..=10).collect()
}

/// Cluster counts `3..=10`.
pub fn default_cluster_counts() -> Vec<usize> {
    (3..=10).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Stratified folds. Each class is shuffled and dealt round-robin, starting
/// where the previous class stopped, so per-class fold sizes differ by at
/// most one and overall fold sizes stay balanced.
pub fn stratified_kfold(labels: &[usize], fold_count: usize, seed: u64) -> Result<Vec<Fold>> {
    if fold_count < 2 {
        return Err(Error::argument(format!(
            "need at least 2 folds, got {fold_count}"
        )));
    }
    let class_count = labels.iter().max().map_or(0, |m| m + 1);
    let mut members = vec![Vec::new(); class_count];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    let mut rng = seed::rng(seed);
    let mut validation = vec![Vec::new(); fold_count];
    let mut offset = 0;
    for (class, mut idx) in members.into_iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        if idx.len() < fold_count {
            return Err(Error::validation(format!(
                "class {class} has {} samples, fewer than the {fold_count} folds",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for (p, i) in idx.iter().enumerate() {
            validation[(offset + p) % fold_count].push(*i);
        }
        offset = (offset + idx.len()) % fold_count;
    }
    let n = labels.len();
    Ok(validation
        .into_iter()
        .map(|mut v| {
            v.sort_unstable();
            let mut held = vec![false; n];
            for &i in &v {
                held[i] = true;
            }
            Fold {
                train: (0..n).filter(|&i| !held[i]).collect(),
                validation: v,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvScore {
    /// Unweighted mean of per-fold overall accuracy.
    pub mean_accuracy: f64,
    /// Sample std of per-fold accuracy.
    pub std_accuracy: f64,
    pub fold_accuracies: Vec<f64>,
    /// Kappa of the confusion matrix pooled over all validation folds.
    pub pooled_kappa: f64,
    pub converged: bool,
}

fn submatrix(m: ArrayView2<f64>, rows: &[usize], cols: &[usize]) -> Array2<f64> {
    m.select(Axis(0), rows).select(Axis(1), cols)
}

/// Cross-validation with a Gram matrix of the whole dataset precomputed.
pub fn cross_validate_gram(
    gram: ArrayView2<f64>,
    labels: &[usize],
    class_count: usize,
    config: &TrainConfig,
    folds: &[Fold],
) -> Result<CvScore> {
    if folds.is_empty() {
        return Err(Error::argument("cross-validation needs at least one fold"));
    }
    let results = folds
        .par_iter()
        .map(|fold| {
            let train_labels: Vec<usize> = fold.train.iter().map(|&i| labels[i]).collect();
            let k_train = submatrix(gram, &fold.train, &fold.train);
            let ensemble =
                PairwiseEnsemble::train(k_train.view(), &train_labels, class_count, config)?;
            let cross = submatrix(gram, &fold.validation, &fold.train);
            let predicted = ensemble.predict_from_cross(cross.view());
            let truth: Vec<usize> = fold.validation.iter().map(|&i| labels[i]).collect();
            let cm = confusion(&truth, &predicted, class_count)?;
            Ok((cm, ensemble.all_converged()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut pooled = metrics::ConfusionMatrix::zeros(class_count);
    let mut fold_accuracies = Vec::with_capacity(results.len());
    let mut converged = true;
    for (cm, ok) in &results {
        fold_accuracies.push(overall_accuracy(cm)?);
        pooled.merge(cm)?;
        converged &= ok;
    }
    let stats = trial_stats(&fold_accuracies)?;
    Ok(CvScore {
        mean_accuracy: stats.mean,
        std_accuracy: stats.std,
        fold_accuracies,
        pooled_kappa: cohen_kappa(&pooled)?,
        converged,
    })
}

/// Trains on each fold's complement and scores overall accuracy on the
/// held-out fold.
pub fn cross_validate(
    ds: &LabeledDataset,
    spec: &KernelSpec,
    config: &TrainConfig,
    folds: &[Fold],
) -> Result<CvScore> {
    check_folds(ds.sample_count(), folds)?;
    let gram = kernels::gram_symmetric(spec, ds.features().view())?;
    cross_validate_gram(gram.view(), ds.labels(), ds.class_count(), config, folds)
}

fn check_folds(n: usize, folds: &[Fold]) -> Result<()> {
    for fold in folds {
        if fold.train.iter().chain(&fold.validation).any(|&i| i >= n) {
            return Err(Error::argument("fold index outside the dataset"));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(default = "default_trade_offs")]
    pub trade_offs: Vec<f64>,
    #[serde(default)]
    pub rbf_gammas: Option<Vec<f64>>,
    #[serde(default)]
    pub polynomial_degrees: Option<Vec<u32>>,
    #[serde(default = "default_fold_count")]
    pub fold_count: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_fold_count() -> usize {
    5
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            trade_offs: default_trade_offs(),
            rbf_gammas: Some(default_rbf_gammas()),
            polynomial_degrees: Some(default_polynomial_degrees()),
            fold_count: default_fold_count(),
            seed: 0,
        }
    }
}

impl GridSpec {
    /// Kernel specs the grid covers for `family`.
    pub fn kernel_specs(&self, family: KernelFamily) -> Result<Vec<KernelSpec>> {
        let specs: Vec<KernelSpec> = match family {
            KernelFamily::Linear => vec![KernelSpec::Linear],
            KernelFamily::Polynomial => self
                .polynomial_degrees
                .clone()
                .unwrap_or_default()
                .into_iter()
                .map(|degree| KernelSpec::Polynomial { degree })
                .collect(),
            KernelFamily::Rbf => self
                .rbf_gammas
                .clone()
                .unwrap_or_default()
                .into_iter()
                .map(|gamma| KernelSpec::Rbf { gamma })
                .collect(),
            KernelFamily::Rrbf | KernelFamily::Crrbf => {
                return Err(Error::argument(format!(
                    "{family} kernels draw their bandwidths at random and are not grid-searched"
                )))
            }
        };
        if specs.is_empty() || self.trade_offs.is_empty() {
            return Err(Error::argument(format!("the {family} grid is empty")));
        }
        for s in &specs {
            s.validate(None)?;
        }
        Ok(specs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub kernel: KernelSpec,
    pub trade_off: f64,
    pub score: CvScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub family: KernelFamily,
    pub best: GridRow,
    /// Kernel parameter major, trade-off minor, in grid order.
    pub table: Vec<GridRow>,
    pub folds: usize,
}

fn kernel_param(spec: &KernelSpec) -> f64 {
    match spec {
        KernelSpec::Rbf { gamma } => *gamma,
        KernelSpec::Polynomial { degree } => f64::from(*degree),
        _ => 0.0,
    }
}

/// Highest mean accuracy; ties go to the smaller trade-off, then the
/// smaller kernel parameter.
fn better(a: &GridRow, b: &GridRow) -> bool {
    let (ma, mb) = (a.score.mean_accuracy, b.score.mean_accuracy);
    if ma != mb {
        return ma > mb;
    }
    if a.trade_off != b.trade_off {
        return a.trade_off < b.trade_off;
    }
    kernel_param(&a.kernel) < kernel_param(&b.kernel)
}

/// Exhaustive search over the grid by stratified k-fold CV.
pub fn grid_search(
    ds: &LabeledDataset,
    family: KernelFamily,
    grid: &GridSpec,
    config: &TrainConfig,
) -> Result<GridSearchResult> {
    let specs = grid.kernel_specs(family)?;
    for &c in &grid.trade_offs {
        config.with_trade_off(c).validate()?;
    }
    let folds = stratified_kfold(ds.labels(), grid.fold_count, grid.seed)?;
    let x = ds.features().view();
    // One pass over the data serves every bandwidth / degree.
    let base = match family {
        KernelFamily::Rbf => kernels::squared_distances(x),
        KernelFamily::Polynomial | KernelFamily::Linear => kernels::inner_products(x),
        _ => unreachable!("rejected by kernel_specs"),
    };
    let mut table = Vec::with_capacity(specs.len() * grid.trade_offs.len());
    for spec in specs {
        let gram = match &spec {
            KernelSpec::Rbf { gamma } => kernels::rbf_gram_from_distances(&base, *gamma)?,
            KernelSpec::Polynomial { degree } => {
                kernels::polynomial_gram_from_inner(&base, *degree)?
            }
            _ => base.clone(),
        };
        let rows = grid
            .trade_offs
            .par_iter()
            .map(|&c| {
                let score = cross_validate_gram(
                    gram.view(),
                    ds.labels(),
                    ds.class_count(),
                    &config.with_trade_off(c),
                    &folds,
                )?;
                Ok(GridRow {
                    kernel: spec.clone(),
                    trade_off: c,
                    score,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        table.extend(rows);
    }
    let best = table
        .iter()
        .fold(None::<&GridRow>, |acc, row| match acc {
            Some(b) if !better(row, b) => Some(b),
            _ => Some(row),
        })
        .expect("grid is non-empty")
        .clone();
    Ok(GridSearchResult {
        family,
        best,
        table,
        folds: grid.fold_count,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialPlan {
    #[serde(default = "default_cluster_counts")]
    pub cluster_counts: Vec<usize>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    /// Bandwidth range; the sampler's own seed is replaced per trial.
    #[serde(default)]
    pub sampler: GammaSampler,
    #[serde(default)]
    pub base_seed: u64,
}

fn default_repeats() -> usize {
    10
}

impl Default for TrialPlan {
    fn default() -> Self {
        Self {
            cluster_counts: default_cluster_counts(),
            repeats: default_repeats(),
            sampler: GammaSampler::default(),
            base_seed: 0,
        }
    }
}

impl TrialPlan {
    pub fn validate(&self, band_count: usize) -> Result<()> {
        if self.repeats < 1 {
            return Err(Error::argument("trial plan needs repeats >= 1"));
        }
        if self.cluster_counts.is_empty() {
            return Err(Error::argument(
                "trial plan needs at least one cluster count",
            ));
        }
        if let Some(&k) = self
            .cluster_counts
            .iter()
            .find(|&&k| k < 1 || k > band_count)
        {
            return Err(Error::argument(format!(
                "cluster count {k} outside 1..={band_count}"
            )));
        }
        self.sampler.validate()
    }
}

/// Seed of trial `repeat` at cluster count `k`.
pub fn trial_seed(base: u64, cluster_count: usize, repeat: usize) -> u64 {
    seed::derive(base, &[cluster_count as u64, repeat as u64])
}

const CLUSTER_STREAM: u64 = 0;
const GAMMA_STREAM: u64 = 1;
const SUBSAMPLE_STREAM: u64 = 2;

/// Random kernels compared in trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomKernel {
    Crrbf,
    Rrbf,
}

/// One randomized kernel evaluated at every trade-off value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub cluster_count: usize,
    pub repeat: usize,
    pub seed: u64,
    pub kernel: KernelSpec,
    /// Test accuracy per trade-off value, in table order.
    pub accuracies: Vec<f64>,
    pub kappas: Vec<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialCell {
    pub accuracy: TrialStats,
    pub mean_kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub cluster_count: usize,
    /// One cell per trade-off value.
    pub cells: Vec<TrialCell>,
    pub trials: Vec<TrialOutcome>,
}

impl TrialRow {
    /// Index of the trade-off with the best mean accuracy (ties → smaller C).
    pub fn best_cell(&self, trade_offs: &[f64]) -> usize {
        best_index(self.cells.iter().map(|c| c.accuracy.mean), trade_offs)
    }

    /// Per-trial best accuracy over trade-offs, averaged over trials.
    pub fn mean_of_trial_maxima(&self) -> f64 {
        let maxima: Vec<f64> = self
            .trials
            .iter()
            .map(|t| {
                t.accuracies
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        maxima.iter().sum::<f64>() / maxima.len() as f64
    }
}

fn best_index(values: impl Iterator<Item = f64>, trade_offs: &[f64]) -> usize {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        best = match best {
            Some((b, bv)) if bv > v || (bv == v && trade_offs[b] <= trade_offs[i]) => Some((b, bv)),
            _ => Some((i, v)),
        };
    }
    best.map_or(0, |(i, _)| i)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialTable {
    pub kernel: RandomKernel,
    pub trade_offs: Vec<f64>,
    pub repeats: usize,
    pub rows: Vec<TrialRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestTrialCell {
    pub cluster_count: usize,
    pub trade_off: f64,
    pub mean_accuracy: f64,
    pub mean_kappa: f64,
}

impl TrialTable {
    /// Cell with the highest mean accuracy; ties → smaller C, then smaller k.
    pub fn best(&self) -> BestTrialCell {
        let mut best: Option<BestTrialCell> = None;
        for row in &self.rows {
            for (ci, cell) in row.cells.iter().enumerate() {
                let cand = BestTrialCell {
                    cluster_count: row.cluster_count,
                    trade_off: self.trade_offs[ci],
                    mean_accuracy: cell.accuracy.mean,
                    mean_kappa: cell.mean_kappa,
                };
                let replace = match &best {
                    None => true,
                    Some(b) => {
                        cand.mean_accuracy > b.mean_accuracy
                            || (cand.mean_accuracy == b.mean_accuracy
                                && (cand.trade_off < b.trade_off
                                    || (cand.trade_off == b.trade_off
                                        && cand.cluster_count < b.cluster_count)))
                    }
                };
                if replace {
                    best = Some(cand);
                }
            }
        }
        best.expect("trial table has at least one cell")
    }

    /// Per cluster count: the trade-off-maximized mean accuracy.
    pub fn max_over_trade_offs(&self) -> Vec<BestTrialCell> {
        self.rows
            .iter()
            .map(|row| {
                let ci = row.best_cell(&self.trade_offs);
                BestTrialCell {
                    cluster_count: row.cluster_count,
                    trade_off: self.trade_offs[ci],
                    mean_accuracy: row.cells[ci].accuracy.mean,
                    mean_kappa: row.cells[ci].mean_kappa,
                }
            })
            .collect()
    }

    /// Spread of [`TrialTable::max_over_trade_offs`] across cluster counts.
    pub fn cluster_count_spread(&self) -> Result<TrialStats> {
        let v: Vec<f64> = self
            .max_over_trade_offs()
            .iter()
            .map(|b| b.mean_accuracy)
            .collect();
        trial_stats(&v)
    }

    pub fn all_converged(&self) -> bool {
        self.rows
            .iter()
            .flat_map(|r| &r.trials)
            .all(|t| t.converged)
    }
}

fn check_pair(train: &LabeledDataset, test: &LabeledDataset) -> Result<()> {
    if train.band_count() != test.band_count() {
        return Err(Error::argument(format!(
            "train has {} bands, test has {}",
            train.band_count(),
            test.band_count()
        )));
    }
    if train.class_count() != test.class_count() {
        return Err(Error::argument(format!(
            "train has {} classes, test has {}",
            train.class_count(),
            test.class_count()
        )));
    }
    Ok(())
}

/// Trains at each trade-off and scores on `test`, sharing one Gram and one
/// cross Gram across trade-offs.
fn evaluate_kernel(
    train: &LabeledDataset,
    test: &LabeledDataset,
    spec: &KernelSpec,
    trade_offs: &[f64],
    config: &TrainConfig,
) -> Result<(Vec<f64>, Vec<f64>, bool)> {
    let gram = kernels::gram_symmetric(spec, train.features().view())?;
    let cross = kernels::gram(spec, test.features().view(), train.features().view())?;
    let mut accuracies = Vec::with_capacity(trade_offs.len());
    let mut kappas = Vec::with_capacity(trade_offs.len());
    let mut converged = true;
    for &c in trade_offs {
        let ensemble = PairwiseEnsemble::train(
            gram.view(),
            train.labels(),
            train.class_count(),
            &config.with_trade_off(c),
        )?;
        converged &= ensemble.all_converged();
        let predicted = ensemble.predict_from_cross(cross.view());
        let cm = confusion(test.labels(), &predicted, test.class_count())?;
        accuracies.push(overall_accuracy(&cm)?);
        kappas.push(cohen_kappa(&cm)?);
    }
    Ok((accuracies, kappas, converged))
}

/// Draws the random kernel of one trial. CRRBF clusters the bands of
/// `train` first; RRBF ignores `cluster_count`.
pub fn trial_kernel(
    train: &LabeledDataset,
    kind: RandomKernel,
    cluster_count: usize,
    trial_seed: u64,
    sampler: &GammaSampler,
) -> Result<KernelSpec> {
    let sampler = sampler.with_seed(seed::derive(trial_seed, &[GAMMA_STREAM]));
    match kind {
        RandomKernel::Crrbf => {
            let clustering = cluster_bands(
                train,
                cluster_count,
                seed::derive(trial_seed, &[CLUSTER_STREAM]),
            )?;
            sample_crrbf(&clustering, &sampler)
        }
        RandomKernel::Rrbf => sample_rrbf(train.band_count(), &sampler),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_trial(
    train: &LabeledDataset,
    test: &LabeledDataset,
    kind: RandomKernel,
    cluster_count: usize,
    repeat: usize,
    plan: &TrialPlan,
    trade_offs: &[f64],
    config: &TrainConfig,
) -> Result<TrialOutcome> {
    let seed = trial_seed(plan.base_seed, cluster_count, repeat);
    let kernel = trial_kernel(train, kind, cluster_count, seed, &plan.sampler)?;
    let (accuracies, kappas, converged) =
        evaluate_kernel(train, test, &kernel, trade_offs, config)?;
    Ok(TrialOutcome {
        cluster_count,
        repeat,
        seed,
        kernel,
        accuracies,
        kappas,
        converged,
    })
}

fn summarize_row(
    cluster_count: usize,
    trials: Vec<TrialOutcome>,
    columns: usize,
) -> Result<TrialRow> {
    let cells = (0..columns)
        .map(|ci| {
            let acc: Vec<f64> = trials.iter().map(|t| t.accuracies[ci]).collect();
            let kappa = trials.iter().map(|t| t.kappas[ci]).sum::<f64>() / trials.len() as f64;
            Ok(TrialCell {
                accuracy: trial_stats(&acc)?,
                mean_kappa: kappa,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialRow {
        cluster_count,
        cells,
        trials,
    })
}

/// All `plan.repeats` trials at one cluster count.
pub fn run_trial_row(
    train: &LabeledDataset,
    test: &LabeledDataset,
    kind: RandomKernel,
    cluster_count: usize,
    plan: &TrialPlan,
    trade_offs: &[f64],
    config: &TrainConfig,
) -> Result<TrialRow> {
    check_pair(train, test)?;
    if trade_offs.is_empty() {
        return Err(Error::argument("at least one trade-off value is required"));
    }
    let trials = (0..plan.repeats)
        .into_par_iter()
        .map(|r| {
            run_trial(
                train,
                test,
                kind,
                cluster_count,
                r,
                plan,
                trade_offs,
                config,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    summarize_row(cluster_count, trials, trade_offs.len())
}

/// Cluster-count × trade-off sweep of CRRBF kernels, `plan.repeats` random
/// kernels per cluster count, each scored on `test`.
pub fn run_crrbf_trials(
    train: &LabeledDataset,
    test: &LabeledDataset,
    plan: &TrialPlan,
    trade_offs: &[f64],
    config: &TrainConfig,
) -> Result<TrialTable> {
    plan.validate(train.band_count())?;
    let rows = plan
        .cluster_counts
        .iter()
        .map(|&k| {
            run_trial_row(
                train,
                test,
                RandomKernel::Crrbf,
                k,
                plan,
                trade_offs,
                config,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialTable {
        kernel: RandomKernel::Crrbf,
        trade_offs: trade_offs.to_vec(),
        repeats: plan.repeats,
        rows,
    })
}

/// RRBF trials: one row, labelled with the band count.
pub fn run_rrbf_trials(
    train: &LabeledDataset,
    test: &LabeledDataset,
    plan: &TrialPlan,
    trade_offs: &[f64],
    config: &TrainConfig,
) -> Result<TrialTable> {
    let d = train.band_count();
    let plan = TrialPlan {
        cluster_counts: vec![d],
        ..plan.clone()
    };
    plan.validate(d)?;
    let row = run_trial_row(
        train,
        test,
        RandomKernel::Rrbf,
        d,
        &plan,
        trade_offs,
        config,
    )?;
    Ok(TrialTable {
        kernel: RandomKernel::Rrbf,
        trade_offs: trade_offs.to_vec(),
        repeats: plan.repeats,
        rows: vec![row],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionRow {
    pub fraction: f64,
    pub train_size: usize,
    pub accuracy: TrialStats,
    pub mean_kappa: f64,
    pub trials: Vec<TrialOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionSweep {
    pub kernel: RandomKernel,
    pub cluster_count: usize,
    pub trade_off: f64,
    pub repeats: usize,
    pub rows: Vec<FractionRow>,
}

/// Seed used to subsample the training set for (`fraction`, `repeat`).
pub fn subsample_seed(base: u64, fraction: f64, repeat: usize) -> u64 {
    seed::derive(base, &[SUBSAMPLE_STREAM, fraction.to_bits(), repeat as u64])
}

/// Training-set-size study at fixed cluster count and trade-off.
///
/// Repeat `r` uses the same kernel seed as trial `r` of
/// [`run_crrbf_trials`] at this cluster count; since `fraction = 1.0` keeps
/// the training set unchanged, that row reproduces the trial table cell.
pub fn training_fraction_sweep(
    train: &LabeledDataset,
    test: &LabeledDataset,
    fractions: &[f64],
    cluster_count: usize,
    trade_off: f64,
    plan: &TrialPlan,
    config: &TrainConfig,
) -> Result<FractionSweep> {
    check_pair(train, test)?;
    if fractions.is_empty() {
        return Err(Error::argument(
            "at least one training fraction is required",
        ));
    }
    if let Some(f) = fractions.iter().find(|&&f| !(f > 0.0 && f <= 1.0)) {
        return Err(Error::argument(format!(
            "training fraction {f} outside (0, 1]"
        )));
    }
    let plan = TrialPlan {
        cluster_counts: vec![cluster_count],
        ..plan.clone()
    };
    plan.validate(train.band_count())?;
    let rows = fractions
        .iter()
        .map(|&fraction| {
            let trials = (0..plan.repeats)
                .into_par_iter()
                .map(|r| {
                    let sub = stratified_subsample(
                        train,
                        fraction,
                        subsample_seed(plan.base_seed, fraction, r),
                    )?;
                    let outcome = run_trial(
                        &sub,
                        test,
                        RandomKernel::Crrbf,
                        cluster_count,
                        r,
                        &plan,
                        &[trade_off],
                        config,
                    )?;
                    Ok((sub.sample_count(), outcome))
                })
                .collect::<Result<Vec<_>>>()?;
            let train_size = trials[0].0;
            let trials: Vec<TrialOutcome> = trials.into_iter().map(|(_, t)| t).collect();
            let acc: Vec<f64> = trials.iter().map(|t| t.accuracies[0]).collect();
            Ok(FractionRow {
                fraction,
                train_size,
                accuracy: trial_stats(&acc)?,
                mean_kappa: trials.iter().map(|t| t.kappas[0]).sum::<f64>() / trials.len() as f64,
                trials,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FractionSweep {
        kernel: RandomKernel::Crrbf,
        cluster_count,
        trade_off,
        repeats: plan.repeats,
        rows,
    })
}

/// Trains with `spec` on `train`, returns (accuracy, kappa, converged) on `test`.
pub fn holdout_score(
    train: &LabeledDataset,
    test: &LabeledDataset,
    spec: &KernelSpec,
    config: &TrainConfig,
) -> Result<(f64, f64, bool)> {
    check_pair(train, test)?;
    let (a, k, ok) = evaluate_kernel(train, test, spec, &[config.trade_off], config)?;
    Ok((a[0], k[0], ok))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, stratified_split, SyntheticSpec};
    use proptest::prelude::*;

    fn labels(counts: &[usize]) -> Vec<usize> {
        counts
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
            .collect()
    }

    #[test]
    fn default_grids() {
        assert_eq!(default_trade_offs().len(), 11);
        assert_eq!(default_trade_offs()[10], 1024.0);
        let g = default_rbf_gammas();
        assert_eq!(g.len(), 21);
        assert_eq!(g[0], 0.01);
        assert_eq!(g[19], 19.01);
        assert_eq!(g[20], 20.0);
        assert_eq!(default_polynomial_degrees(), (1..=10).collect::<Vec<_>>());
        assert_eq!(default_cluster_counts(), vec![3, 4, 5, 6, 7, 8, 9, 10]);
    }

    #[test]
    fn kfold_even_split() {
        let y = labels(&[10, 10]);
        let folds = stratified_kfold(&y, 5, 1).unwrap();
        assert_eq!(folds.len(), 5);
        for f in &folds {
            for c in 0..2 {
                assert_eq!(f.validation.iter().filter(|&&i| y[i] == c).count(), 2);
            }
        }
    }

    #[test]
    fn kfold_uneven_class() {
        let y = labels(&[11, 5]);
        let folds = stratified_kfold(&y, 5, 3).unwrap();
        let mut counts: Vec<usize> = folds
            .iter()
            .map(|f| f.validation.iter().filter(|&&i| y[i] == 0).count())
            .collect();
        counts.sort_unstable();
        assert_eq!(counts, vec![2, 2, 2, 2, 3]);
    }

    #[test]
    fn kfold_errors() {
        let y = labels(&[10, 3]);
        let err = stratified_kfold(&y, 5, 0).unwrap_err();
        assert!(
            matches!(err, Error::Validation(ref m) if m.contains("class 1")),
            "{err}"
        );
        assert!(matches!(
            stratified_kfold(&y, 1, 0),
            Err(Error::Argument(_))
        ));
    }

    proptest! {
        #[test]
        fn kfold_partitions(counts in proptest::collection::vec(5usize..30, 2..5), folds in 2usize..6, seed in 0u64..100) {
            let y = labels(&counts);
            let f = stratified_kfold(&y, folds, seed).unwrap();
            let mut seen = vec![0; y.len()];
            for fold in &f {
                for &i in &fold.validation {
                    seen[i] += 1;
                    prop_assert!(!fold.train.contains(&i));
                }
                prop_assert_eq!(fold.train.len() + fold.validation.len(), y.len());
            }
            prop_assert!(seen.iter().all(|&s| s == 1));
            for c in 0..counts.len() {
                let sizes: Vec<usize> = f.iter().map(|fold| fold.validation.iter().filter(|&&i| y[i] == c).count()).collect();
                prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            }
            prop_assert_eq!(&stratified_kfold(&y, folds, seed).unwrap(), &f);
        }
    }

    fn separable(seed: u64) -> LabeledDataset {
        generate_synthetic(&SyntheticSpec {
            class_count: 3,
            samples_per_class: 20,
            band_count: 10,
            spectral_smoothness: 0.5,
            class_separation: 2.0,
            noise_std: 0.1,
            seed,
        })
        .unwrap()
    }

    #[test]
    fn cv_on_separable_data_is_perfect_and_deterministic() {
        let ds = separable(5);
        let folds = stratified_kfold(ds.labels(), 5, 2).unwrap();
        let spec = KernelSpec::Rbf { gamma: 0.05 };
        let a = cross_validate(&ds, &spec, &TrainConfig::new(10.0), &folds).unwrap();
        assert_eq!(a.mean_accuracy, 1.0);
        assert_eq!(a.pooled_kappa, 1.0);
        let b = cross_validate(&ds, &spec, &TrainConfig::new(10.0), &folds).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cv_on_shuffled_labels_is_chance() {
        let base = generate_synthetic(&SyntheticSpec {
            class_count: 2,
            samples_per_class: 60,
            band_count: 5,
            spectral_smoothness: 0.0,
            class_separation: 1.0,
            noise_std: 1.0,
            seed: 8,
        })
        .unwrap();
        let mut y = base.labels().to_vec();
        y.shuffle(&mut seed::rng(77));
        let ds = LabeledDataset::new(base.features().clone(), y).unwrap();
        let folds = stratified_kfold(ds.labels(), 5, 1).unwrap();
        let score = cross_validate(
            &ds,
            &KernelSpec::Rbf { gamma: 0.5 },
            &TrainConfig::new(1.0),
            &folds,
        )
        .unwrap();
        assert!(
            (score.mean_accuracy - 0.5).abs() <= 0.1,
            "{}",
            score.mean_accuracy
        );
    }

    #[test]
    fn grid_search_single_point_and_tie_break() {
        let ds = separable(6);
        let grid = GridSpec {
            trade_offs: vec![4.0],
            rbf_gammas: Some(vec![0.1]),
            polynomial_degrees: None,
            fold_count: 3,
            seed: 0,
        };
        let r = grid_search(&ds, KernelFamily::Rbf, &grid, &TrainConfig::new(1.0)).unwrap();
        assert_eq!(r.table.len(), 1);
        assert_eq!(r.best.trade_off, 4.0);

        // Separable: every C reaches 1.0, so the smallest C must win.
        let grid = GridSpec {
            trade_offs: vec![64.0, 2.0, 16.0],
            rbf_gammas: Some(vec![0.05, 0.02]),
            ..grid
        };
        let r = grid_search(&ds, KernelFamily::Rbf, &grid, &TrainConfig::new(1.0)).unwrap();
        assert_eq!(r.table.len(), 6);
        let max = r
            .table
            .iter()
            .map(|row| row.score.mean_accuracy)
            .fold(0.0, f64::max);
        assert_eq!(r.best.score.mean_accuracy, max);
        assert_eq!(max, 1.0);
        assert_eq!(r.best.trade_off, 2.0);
        assert_eq!(r.best.kernel, KernelSpec::Rbf { gamma: 0.02 });
    }

    #[test]
    fn grid_search_rejects_empty_and_random_families() {
        let ds = separable(1);
        let grid = GridSpec {
            rbf_gammas: Some(vec![]),
            ..GridSpec::default()
        };
        assert!(matches!(
            grid_search(&ds, KernelFamily::Rbf, &grid, &TrainConfig::new(1.0)),
            Err(Error::Argument(_))
        ));
        assert!(grid_search(
            &ds,
            KernelFamily::Crrbf,
            &GridSpec::default(),
            &TrainConfig::new(1.0)
        )
        .is_err());
    }

    #[test]
    fn default_rbf_grid_has_231_points() {
        let grid = GridSpec::default();
        let specs = grid.kernel_specs(KernelFamily::Rbf).unwrap();
        assert_eq!(specs.len() * grid.trade_offs.len(), 231);
    }

    fn split(seed: u64) -> (LabeledDataset, LabeledDataset) {
        let ds = generate_synthetic(&SyntheticSpec {
            class_count: 3,
            samples_per_class: 24,
            band_count: 12,
            spectral_smoothness: 0.8,
            class_separation: 0.3,
            noise_std: 0.1,
            seed,
        })
        .unwrap();
        stratified_split(&ds, 0.5, seed).unwrap()
    }

    #[test]
    fn trials_shape_and_determinism() {
        let (train, test) = split(3);
        let plan = TrialPlan {
            cluster_counts: vec![2, 4],
            repeats: 3,
            sampler: GammaSampler::default(),
            base_seed: 9,
        };
        let c = [1.0, 16.0, 256.0];
        let a = run_crrbf_trials(&train, &test, &plan, &c, &TrainConfig::new(1.0)).unwrap();
        assert_eq!(a.rows.len(), 2);
        assert!(a
            .rows
            .iter()
            .all(|r| r.cells.len() == 3 && r.trials.len() == 3));
        let b = run_crrbf_trials(&train, &test, &plan, &c, &TrainConfig::new(1.0)).unwrap();
        assert_eq!(a, b);
        let best = a.best();
        let max = a
            .rows
            .iter()
            .flat_map(|r| r.cells.iter().map(|c| c.accuracy.mean))
            .fold(0.0, f64::max);
        assert_eq!(best.mean_accuracy, max);
        // each reported mean is the mean of exactly `repeats` values
        for row in &a.rows {
            for (ci, cell) in row.cells.iter().enumerate() {
                assert_eq!(cell.accuracy.count, 3);
                let m = row.trials.iter().map(|t| t.accuracies[ci]).sum::<f64>() / 3.0;
                assert!((cell.accuracy.mean - m).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn trial_replays_from_its_seed() {
        let (train, test) = split(4);
        let plan = TrialPlan {
            cluster_counts: vec![3],
            repeats: 2,
            sampler: GammaSampler::default(),
            base_seed: 1,
        };
        let t = run_crrbf_trials(&train, &test, &plan, &[8.0], &TrainConfig::new(1.0)).unwrap();
        let outcome = &t.rows[0].trials[1];
        let kernel =
            trial_kernel(&train, RandomKernel::Crrbf, 3, outcome.seed, &plan.sampler).unwrap();
        assert_eq!(kernel, outcome.kernel);
        let (acc, _, _) = holdout_score(&train, &test, &kernel, &TrainConfig::new(8.0)).unwrap();
        assert_eq!(acc, outcome.accuracies[0]);
    }

    #[test]
    fn full_fraction_matches_trials() {
        let (train, test) = split(7);
        let plan = TrialPlan {
            cluster_counts: vec![3],
            repeats: 3,
            sampler: GammaSampler::default(),
            base_seed: 21,
        };
        let table =
            run_crrbf_trials(&train, &test, &plan, &[32.0], &TrainConfig::new(1.0)).unwrap();
        let sweep = training_fraction_sweep(
            &train,
            &test,
            &[0.5, 1.0],
            3,
            32.0,
            &plan,
            &TrainConfig::new(1.0),
        )
        .unwrap();
        assert_eq!(sweep.rows[1].accuracy, table.rows[0].cells[0].accuracy);
        assert_eq!(sweep.rows[1].train_size, train.sample_count());
        assert!(sweep.rows[0].train_size < train.sample_count());
        assert!(training_fraction_sweep(
            &train,
            &test,
            &[0.0],
            3,
            1.0,
            &plan,
            &TrainConfig::new(1.0)
        )
        .is_err());
    }

    #[test]
    fn rrbf_trials_single_row() {
        let (train, test) = split(2);
        let plan = TrialPlan {
            repeats: 2,
            ..TrialPlan::default()
        };
        let t = run_rrbf_trials(&train, &test, &plan, &[1.0, 4.0], &TrainConfig::new(1.0)).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].cluster_count, 12);
        assert!(
            matches!(t.rows[0].trials[0].kernel, KernelSpec::Rrbf { ref gammas } if gammas.len() == 12)
        );
    }

    #[test]
    fn plan_validation() {
        let plan = TrialPlan {
            cluster_counts: vec![3, 20],
            ..TrialPlan::default()
        };
        assert!(plan.validate(10).is_err());
        let plan = TrialPlan {
            repeats: 0,
            ..TrialPlan::default()
        };
        assert!(plan.validate(10).is_err());
    }
}
