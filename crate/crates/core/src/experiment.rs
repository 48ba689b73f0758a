//! Config-driven experiment runner and report rendering.
//!
//! Three scenarios are supported:
//!
//! - `cluster_sweep`: CRRBF trials over cluster counts × trade-offs.
//! - `fraction_sweep`: CRRBF at a fixed `(k, C)` over training-set fractions.
//! - `kernel_comparison`: tuned (CV grid search) and random kernels side by
//!   side per training fraction, with timing.
//!
//! A run writes `scores.csv`, `timing.csv`, `report.txt`, `report.json` and
//! `kernels.json` into the output directory. Everything except the timing
//! section is a pure function of the config.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use serde::{Deserialize, Serialize};

use crate::band_clustering::{cluster_bands, BandClustering};
use crate::dataset::{
    generate_synthetic, load_dataset, stratified_split, stratified_subsample, LabeledDataset,
    Standardizer, SyntheticSpec,
};
use crate::error::{Error, Result};
use crate::kernels::{GammaSampler, KernelFamily, KernelSpec};
use crate::metrics::{measure, trial_stats, TimingEntry, TimingRecord, TrialStats};
use crate::model_selection::{
    self, default_cluster_counts, default_polynomial_degrees, default_rbf_gammas,
    default_trade_offs, grid_search, run_trial_row, training_fraction_sweep, FractionSweep,
    GridSearchResult, GridSpec, RandomKernel, TrialPlan, TrialTable,
};
use crate::seed;
use crate::svm::TrainConfig;

pub const REPORT_FORMAT_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NON_CONVERGENCE: i32 = 4;
pub const EXIT_INTERRUPTED: i32 = 130;

const PLAN_STREAM: u64 = 0;
const GRID_STREAM: u64 = 1;
const SPLIT_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    ClusterSweep,
    FractionSweep,
    KernelComparison,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::ClusterSweep => "cluster_sweep",
            Scenario::FractionSweep => "fraction_sweep",
            Scenario::KernelComparison => "kernel_comparison",
        }
    }
}

/// Either `train` + `test` CSV paths, or `synthetic` split by
/// `train_fraction`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSpec>,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
}

fn default_train_fraction() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    #[serde(default = "default_kkt_tolerance")]
    pub kkt_tolerance: f64,
    #[serde(default = "default_max_passes")]
    pub max_passes_without_progress: usize,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
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

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            kkt_tolerance: default_kkt_tolerance(),
            max_passes_without_progress: default_max_passes(),
            max_iterations: default_max_iterations(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSettings {
    #[serde(default = "default_cluster_counts")]
    pub cluster_counts: Vec<usize>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub gamma_low: f64,
    #[serde(default = "default_gamma_high")]
    pub gamma_high: f64,
}

fn default_repeats() -> usize {
    10
}

fn default_gamma_high() -> f64 {
    1.0
}

impl Default for PlanSettings {
    fn default() -> Self {
        Self {
            cluster_counts: default_cluster_counts(),
            repeats: default_repeats(),
            gamma_low: 0.0,
            gamma_high: default_gamma_high(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSettings {
    #[serde(default = "default_rbf_gammas")]
    pub rbf_gammas: Vec<f64>,
    #[serde(default = "default_polynomial_degrees")]
    pub polynomial_degrees: Vec<u32>,
    #[serde(default = "default_fold_count")]
    pub fold_count: usize,
}

fn default_fold_count() -> usize {
    5
}

impl Default for GridSettings {
    fn default() -> Self {
        Self {
            rbf_gammas: default_rbf_gammas(),
            polynomial_degrees: default_polynomial_degrees(),
            fold_count: default_fold_count(),
        }
    }
}

/// Training fractions, and for `fraction_sweep` where `(k, C)` comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FractionSettings {
    #[serde(default = "default_fractions")]
    pub values: Vec<f64>,
    /// A `cluster_sweep` report.json whose best cell supplies `(k, C)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_report: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trade_off: Option<f64>,
}

fn default_fractions() -> Vec<f64> {
    vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.75]
}

impl Default for FractionSettings {
    fn default() -> Self {
        Self {
            values: default_fractions(),
            source_report: None,
            cluster_count: None,
            trade_off: None,
        }
    }
}

fn default_families() -> Vec<String> {
    ["rbf", "polynomial", "rrbf", "crrbf"]
        .map(String::from)
        .to_vec()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub data: DataConfig,
    /// Per-band z-scoring fitted on the training split. Defaults to on for
    /// file data and off for synthetic data.
    #[serde(default)]
    pub standardize: Option<bool>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default = "default_trade_offs")]
    pub trade_offs: Vec<f64>,
    #[serde(default)]
    pub plan: PlanSettings,
    #[serde(default)]
    pub grid: GridSettings,
    #[serde(default)]
    pub fractions: FractionSettings,
    /// Families compared by `kernel_comparison`.
    #[serde(default = "default_families")]
    pub families: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

/// Seeds of the independent random streams of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivedSeeds {
    pub plan: u64,
    pub grid: u64,
    pub split: u64,
}

impl DerivedSeeds {
    pub fn from_base(base: u64) -> Self {
        Self {
            plan: seed::derive(base, &[PLAN_STREAM]),
            grid: seed::derive(base, &[GRID_STREAM]),
            split: seed::derive(base, &[SPLIT_STREAM]),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json(j) => Error::Parse {
                path: Some(path.to_path_buf()),
                line: j.line(),
                message: j.to_string(),
            },
            other => other,
        })
    }

    pub fn standardize_enabled(&self) -> bool {
        self.standardize.unwrap_or(self.data.synthetic.is_none())
    }

    pub fn seeds(&self) -> DerivedSeeds {
        DerivedSeeds::from_base(self.seed)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            trade_off: 1.0,
            kkt_tolerance: self.solver.kkt_tolerance,
            max_passes_without_progress: self.solver.max_passes_without_progress,
            max_iterations: self.solver.max_iterations,
            seed: self.seed,
        }
    }

    pub fn trial_plan(&self) -> TrialPlan {
        TrialPlan {
            cluster_counts: self.plan.cluster_counts.clone(),
            repeats: self.plan.repeats,
            sampler: GammaSampler {
                low: self.plan.gamma_low,
                high: self.plan.gamma_high,
                seed: 0,
            },
            base_seed: self.seeds().plan,
        }
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            trade_offs: self.trade_offs.clone(),
            rbf_gammas: Some(self.grid.rbf_gammas.clone()),
            polynomial_degrees: Some(self.grid.polynomial_degrees.clone()),
            fold_count: self.grid.fold_count,
            seed: self.seeds().grid,
        }
    }

    /// Parsed `families`; an unknown name fails with the list of valid ones.
    pub fn kernel_families(&self) -> Result<Vec<KernelFamily>> {
        self.families.iter().map(|f| f.parse()).collect()
    }

    /// Checks everything that can be checked without reading the data.
    pub fn validate(&self) -> Result<()> {
        let d = &self.data;
        match (&d.train, &d.test, &d.synthetic) {
            (Some(train), Some(test), None) => {
                for p in [train, test] {
                    if !p.is_file() {
                        return Err(Error::validation(format!(
                            "data file {} does not exist",
                            p.display()
                        )));
                    }
                }
            }
            (None, None, Some(spec)) => {
                spec.validate()?;
                if !(d.train_fraction > 0.0 && d.train_fraction < 1.0) {
                    return Err(Error::validation(format!(
                        "data.train_fraction must lie in (0, 1), got {}",
                        d.train_fraction
                    )));
                }
            }
            _ => {
                return Err(Error::validation(
                    "data needs exactly one source: train + test paths, or synthetic",
                ))
            }
        }
        self.train_config().validate()?;
        if self.trade_offs.is_empty() {
            return Err(Error::validation("trade_offs is empty"));
        }
        for &c in &self.trade_offs {
            self.train_config().with_trade_off(c).validate()?;
        }
        self.trial_plan().validate(usize::MAX)?;
        if self.workers == Some(0) {
            return Err(Error::validation("workers must be >= 1"));
        }
        let fractions = &self.fractions.values;
        if matches!(
            self.scenario,
            Scenario::FractionSweep | Scenario::KernelComparison
        ) {
            if fractions.is_empty() {
                return Err(Error::validation("fractions.values is empty"));
            }
            if let Some(f) = fractions.iter().find(|&&f| !(f > 0.0 && f <= 1.0)) {
                return Err(Error::validation(format!(
                    "training fraction {f} outside (0, 1]"
                )));
            }
        }
        match self.scenario {
            Scenario::ClusterSweep => {}
            Scenario::FractionSweep => {
                let f = &self.fractions;
                let explicit = f.cluster_count.is_some() && f.trade_off.is_some();
                if !explicit && f.source_report.is_none() {
                    return Err(Error::validation(
                        "fraction_sweep needs fractions.source_report, or both \
                         fractions.cluster_count and fractions.trade_off",
                    ));
                }
                if let Some(c) = f.trade_off {
                    self.train_config().with_trade_off(c).validate()?;
                }
                if let Some(p) = &f.source_report {
                    if !p.is_file() {
                        return Err(Error::validation(format!(
                            "source report {} does not exist",
                            p.display()
                        )));
                    }
                }
            }
            Scenario::KernelComparison => {
                let families = self.kernel_families()?;
                if families.is_empty() {
                    return Err(Error::validation("families is empty"));
                }
                for fam in families.into_iter().filter(|f| !f.is_random()) {
                    self.grid_spec().kernel_specs(fam)?;
                }
                if self.grid.fold_count < 2 {
                    return Err(Error::validation("grid.fold_count must be >= 2"));
                }
            }
        }
        Ok(())
    }
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, config: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(w) = self.workers {
            config.workers = Some(w);
        }
        if let Some(o) = &self.output_dir {
            config.output_dir = o.clone();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Config,
    Data,
    Runtime,
}

/// An error tagged with the phase that produced it.
#[derive(Debug)]
pub struct Failure {
    pub kind: FailureKind,
    pub error: Error,
}

impl Failure {
    pub fn config(error: Error) -> Self {
        Self {
            kind: FailureKind::Config,
            error,
        }
    }

    pub fn data(error: Error) -> Self {
        Self {
            kind: FailureKind::Data,
            error,
        }
    }

    pub fn runtime(error: Error) -> Self {
        Self {
            kind: FailureKind::Runtime,
            error,
        }
    }

    /// Input-reading errors are data errors, the rest argument errors.
    pub fn classify(error: Error) -> Self {
        match error {
            Error::Io { .. } | Error::Parse { .. } => Self::data(error),
            _ => Self::config(error),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            FailureKind::Config => EXIT_CONFIG,
            FailureKind::Data => EXIT_DATA,
            FailureKind::Runtime => EXIT_RUNTIME,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.kind {
            FailureKind::Config => "config error",
            FailureKind::Data => "data error",
            FailureKind::Runtime => "error",
        };
        write!(f, "{kind}: {}", self.error)
    }
}

impl std::error::Error for Failure {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub train_samples: usize,
    pub test_samples: usize,
    pub band_count: usize,
    pub class_count: usize,
    pub class_ids: Vec<i64>,
    pub standardized: bool,
}

/// One family at one training fraction in a kernel comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub fraction: f64,
    pub train_size: usize,
    pub family: KernelFamily,
    /// Chosen kernel; for random families, trial 0 at the chosen cell.
    pub kernel: KernelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_count: Option<usize>,
    pub trade_off: f64,
    /// Test accuracy; one value for tuned families, one per trial otherwise.
    pub accuracy: TrialStats,
    pub mean_kappa: f64,
    /// Mean CV accuracy of the selected grid point (tuned families).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cv_accuracy: Option<f64>,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSearchResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<TrialTable>,
}

impl ComparisonRow {
    fn parameter(&self) -> String {
        match (&self.kernel, self.cluster_count) {
            (KernelSpec::Rbf { gamma }, _) => format!("gamma={gamma}"),
            (KernelSpec::Polynomial { degree }, _) => format!("degree={degree}"),
            (KernelSpec::Crrbf { .. }, Some(k)) => format!("k={k}"),
            (KernelSpec::Rrbf { gammas }, _) => format!("bands={}", gammas.len()),
            _ => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "snake_case")]
pub enum ScenarioResults {
    ClusterSweep {
        table: TrialTable,
    },
    FractionSweep {
        sweep: FractionSweep,
        /// Where `(k, C)` came from.
        parameter_source: String,
    },
    KernelComparison {
        rows: Vec<ComparisonRow>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestParameters {
    pub family: KernelFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_count: Option<usize>,
    pub trade_off: f64,
    pub mean_accuracy: f64,
    pub mean_kappa: f64,
}

/// A kernel drawn during a run, with the seed that reproduces it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistedKernel {
    pub context: String,
    pub cluster_count: usize,
    pub repeat: usize,
    pub seed: u64,
    pub kernel: KernelSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub format_version: u32,
    pub tool_version: String,
    pub config: ExperimentConfig,
    pub seeds: DerivedSeeds,
    pub data: DataSummary,
    pub results: ScenarioResults,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best: Option<BestParameters>,
    /// False when the run was interrupted before every unit finished.
    pub complete: bool,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<TimingRecord>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses a stored report, rejecting other format versions.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let found = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .unwrap_or(0);
        if found != u64::from(REPORT_FORMAT_VERSION) {
            return Err(Error::VersionMismatch {
                found: u32::try_from(found).unwrap_or(u32::MAX),
                expected: REPORT_FORMAT_VERSION,
            });
        }
        Ok(serde_json::from_value(value)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Every kernel drawn during the run.
    pub fn kernels(&self) -> Vec<PersistedKernel> {
        let from_table = |context: String, table: &TrialTable| -> Vec<PersistedKernel> {
            table
                .rows
                .iter()
                .flat_map(|r| &r.trials)
                .map(|t| PersistedKernel {
                    context: context.clone(),
                    cluster_count: t.cluster_count,
                    repeat: t.repeat,
                    seed: t.seed,
                    kernel: t.kernel.clone(),
                })
                .collect()
        };
        match &self.results {
            ScenarioResults::ClusterSweep { table } => from_table("cluster_sweep".into(), table),
            ScenarioResults::FractionSweep { sweep, .. } => sweep
                .rows
                .iter()
                .flat_map(|row| {
                    row.trials.iter().map(move |t| PersistedKernel {
                        context: format!("fraction={}", row.fraction),
                        cluster_count: t.cluster_count,
                        repeat: t.repeat,
                        seed: t.seed,
                        kernel: t.kernel.clone(),
                    })
                })
                .collect(),
            ScenarioResults::KernelComparison { rows } => rows
                .iter()
                .flat_map(|row| {
                    let ctx = format!("fraction={} family={}", row.fraction, row.family);
                    match &row.trials {
                        Some(t) => from_table(ctx, t),
                        None => Vec::new(),
                    }
                })
                .collect(),
        }
    }
}

struct Prepared {
    train: LabeledDataset,
    test: LabeledDataset,
    standardized: bool,
}

fn prepare_data(config: &ExperimentConfig) -> std::result::Result<Prepared, Failure> {
    let d = &config.data;
    let (train, test) = match (&d.train, &d.test, &d.synthetic) {
        (Some(train), Some(test), _) => {
            let train = load_dataset(train).map_err(Failure::data)?;
            let test = load_dataset(test).map_err(Failure::data)?;
            align_classes(train, test).map_err(Failure::data)?
        }
        (_, _, Some(spec)) => {
            let ds = generate_synthetic(spec).map_err(Failure::config)?;
            stratified_split(&ds, d.train_fraction, config.seeds().split).map_err(Failure::data)?
        }
        _ => unreachable!("rejected by validate"),
    };
    if train.band_count() != test.band_count() {
        return Err(Failure::data(Error::validation(format!(
            "train has {} bands, test has {}",
            train.band_count(),
            test.band_count()
        ))));
    }
    let standardized = config.standardize_enabled();
    if !standardized {
        return Ok(Prepared {
            train,
            test,
            standardized,
        });
    }
    let s = Standardizer::fit(train.features());
    Ok(Prepared {
        train: s.apply(&train).map_err(Failure::data)?,
        test: s.apply(&test).map_err(Failure::data)?,
        standardized,
    })
}

/// Re-densifies the test labels against the training label ids.
fn align_classes(
    train: LabeledDataset,
    test: LabeledDataset,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if test.class_ids() == train.class_ids() {
        return Ok((train, test));
    }
    let ids = train.class_ids();
    let labels = test
        .labels()
        .iter()
        .map(|&l| {
            let id = test.class_ids()[l];
            ids.iter().position(|&t| t == id).ok_or_else(|| {
                Error::validation(format!(
                    "test class {id} does not occur in the training data"
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let test = LabeledDataset::with_class_ids(test.features().clone(), labels, ids.to_vec())
        .map_err(|_| Error::validation("the test data must contain every training class"))?;
    Ok((train, test))
}

fn fraction_parameters(config: &ExperimentConfig) -> Result<(usize, f64, String)> {
    let f = &config.fractions;
    if let (Some(k), Some(c)) = (f.cluster_count, f.trade_off) {
        return Ok((k, c, "config".to_string()));
    }
    let path = f
        .source_report
        .as_ref()
        .ok_or_else(|| Error::validation("no source for (k, C)"))?;
    let source = ExperimentReport::load(path)?;
    match &source.results {
        ScenarioResults::ClusterSweep { table } if !table.rows.is_empty() => {
            let best = table.best();
            Ok((
                f.cluster_count.unwrap_or(best.cluster_count),
                f.trade_off.unwrap_or(best.trade_off),
                path.display().to_string(),
            ))
        }
        _ => Err(Error::validation(format!(
            "{} is not a non-empty cluster_sweep report",
            path.display()
        ))),
    }
}

/// Shared cancellation flag, set from a signal handler.
pub type CancelFlag = AtomicBool;

fn cancelled(flag: &CancelFlag) -> bool {
    flag.load(Ordering::SeqCst)
}

/// Validates, loads the data and runs the scenario. An interrupt returns
/// the results gathered so far with `complete == false`.
pub fn run_experiment(
    config: &ExperimentConfig,
    cancel: &CancelFlag,
) -> std::result::Result<ExperimentReport, Failure> {
    config.validate().map_err(Failure::config)?;
    let run = || run_validated(config, cancel);
    match config.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::runtime(Error::argument(e.to_string())))?
            .install(run),
        None => run(),
    }
}

fn run_validated(
    config: &ExperimentConfig,
    cancel: &CancelFlag,
) -> std::result::Result<ExperimentReport, Failure> {
    let mut timing = TimingRecord::default();
    let (prepared, secs) = measure(|| prepare_data(config));
    let Prepared {
        train,
        test,
        standardized,
    } = prepared?;
    timing.push(TimingEntry {
        stage: "load".into(),
        seconds: secs,
    });
    let plan = config.trial_plan();
    let train_config = config.train_config();
    let d = train.band_count();
    if config.scenario != Scenario::KernelComparison
        || config
            .kernel_families()
            .map_err(Failure::config)?
            .contains(&KernelFamily::Crrbf)
    {
        plan.validate(d).map_err(Failure::config)?;
    }
    let mut complete = true;
    let results = match config.scenario {
        Scenario::ClusterSweep => {
            let mut rows = Vec::new();
            for &k in &plan.cluster_counts {
                if cancelled(cancel) {
                    complete = false;
                    break;
                }
                let (row, secs) = measure(|| {
                    run_trial_row(
                        &train,
                        &test,
                        RandomKernel::Crrbf,
                        k,
                        &plan,
                        &config.trade_offs,
                        &train_config,
                    )
                });
                rows.push(row.map_err(Failure::runtime)?);
                timing.push(TimingEntry {
                    stage: format!("k={k}"),
                    seconds: secs,
                });
            }
            ScenarioResults::ClusterSweep {
                table: TrialTable {
                    kernel: RandomKernel::Crrbf,
                    trade_offs: config.trade_offs.clone(),
                    repeats: plan.repeats,
                    rows,
                },
            }
        }
        Scenario::FractionSweep => {
            let (k, c, source) = fraction_parameters(config).map_err(Failure::config)?;
            if k < 1 || k > d {
                return Err(Failure::config(Error::argument(format!(
                    "cluster count {k} outside 1..={d}"
                ))));
            }
            let mut rows = Vec::new();
            for &f in &config.fractions.values {
                if cancelled(cancel) {
                    complete = false;
                    break;
                }
                let (sweep, secs) = measure(|| {
                    training_fraction_sweep(&train, &test, &[f], k, c, &plan, &train_config)
                });
                rows.extend(sweep.map_err(Failure::runtime)?.rows);
                timing.push(TimingEntry {
                    stage: format!("fraction={f}"),
                    seconds: secs,
                });
            }
            ScenarioResults::FractionSweep {
                sweep: FractionSweep {
                    kernel: RandomKernel::Crrbf,
                    cluster_count: k,
                    trade_off: c,
                    repeats: plan.repeats,
                    rows,
                },
                parameter_source: source,
            }
        }
        Scenario::KernelComparison => {
            let families = config.kernel_families().map_err(Failure::config)?;
            let mut rows = Vec::new();
            'outer: for &f in &config.fractions.values {
                let sub = stratified_subsample(
                    &train,
                    f,
                    model_selection::subsample_seed(plan.base_seed, f, 0),
                )
                .map_err(Failure::runtime)?;
                for &family in &families {
                    if cancelled(cancel) {
                        complete = false;
                        break 'outer;
                    }
                    let row = compare_family(config, &sub, &test, f, family, &plan, &mut timing)
                        .map_err(Failure::runtime)?;
                    rows.push(row);
                }
            }
            ScenarioResults::KernelComparison { rows }
        }
    };
    let converged = results_converged(&results);
    let mut report = ExperimentReport {
        format_version: REPORT_FORMAT_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        config: config.clone(),
        seeds: config.seeds(),
        data: DataSummary {
            train_samples: train.sample_count(),
            test_samples: test.sample_count(),
            band_count: d,
            class_count: train.class_count(),
            class_ids: train.class_ids().to_vec(),
            standardized,
        },
        results,
        best: None,
        complete,
        converged,
        timing: Some(timing),
    };
    report.best = best_parameters(&report.results);
    Ok(report)
}

fn results_converged(results: &ScenarioResults) -> bool {
    match results {
        ScenarioResults::ClusterSweep { table } => table.all_converged(),
        ScenarioResults::FractionSweep { sweep, .. } => sweep
            .rows
            .iter()
            .flat_map(|r| &r.trials)
            .all(|t| t.converged),
        ScenarioResults::KernelComparison { rows } => rows.iter().all(|r| r.converged),
    }
}

fn comparison_stage(fraction: f64, family: KernelFamily, part: &str) -> String {
    format!("fraction={fraction} {family} {part}")
}

fn compare_family(
    config: &ExperimentConfig,
    train: &LabeledDataset,
    test: &LabeledDataset,
    fraction: f64,
    family: KernelFamily,
    plan: &TrialPlan,
    timing: &mut TimingRecord,
) -> Result<ComparisonRow> {
    let base = config.train_config();
    if !family.is_random() {
        let (grid, secs) = measure(|| grid_search(train, family, &config.grid_spec(), &base));
        let grid = grid?;
        timing.push(TimingEntry {
            stage: comparison_stage(fraction, family, "select"),
            seconds: secs,
        });
        let best = &grid.best;
        let cfg = base.with_trade_off(best.trade_off);
        let (score, secs) =
            measure(|| model_selection::holdout_score(train, test, &best.kernel, &cfg));
        let (acc, kappa, ok) = score?;
        timing.push(TimingEntry {
            stage: comparison_stage(fraction, family, "final"),
            seconds: secs,
        });
        return Ok(ComparisonRow {
            fraction,
            train_size: train.sample_count(),
            family,
            kernel: best.kernel.clone(),
            cluster_count: None,
            trade_off: best.trade_off,
            accuracy: trial_stats(&[acc])?,
            mean_kappa: kappa,
            cv_accuracy: Some(best.score.mean_accuracy),
            converged: ok && grid.table.iter().all(|r| r.score.converged),
            grid: Some(grid),
            trials: None,
        });
    }
    let (kind, counts) = match family {
        KernelFamily::Crrbf => (RandomKernel::Crrbf, plan.cluster_counts.clone()),
        _ => (RandomKernel::Rrbf, vec![train.band_count()]),
    };
    let (rows, secs) = measure(|| {
        counts
            .iter()
            .map(|&k| run_trial_row(train, test, kind, k, plan, &config.trade_offs, &base))
            .collect::<Result<Vec<_>>>()
    });
    timing.push(TimingEntry {
        stage: comparison_stage(fraction, family, "select"),
        seconds: secs,
    });
    let table = TrialTable {
        kernel: kind,
        trade_offs: config.trade_offs.clone(),
        repeats: plan.repeats,
        rows: rows?,
    };
    let best = table.best();
    let ci = table
        .trade_offs
        .iter()
        .position(|&c| c == best.trade_off)
        .expect("best trade-off is in the grid");
    let row = table
        .rows
        .iter()
        .find(|r| r.cluster_count == best.cluster_count)
        .expect("best row exists");
    // One train + predict pipeline at the chosen cell, for timing.
    let kernel = row.trials[0].kernel.clone();
    let cfg = base.with_trade_off(best.trade_off);
    let (replay, secs) = measure(|| model_selection::holdout_score(train, test, &kernel, &cfg));
    replay?;
    timing.push(TimingEntry {
        stage: comparison_stage(fraction, family, "final"),
        seconds: secs,
    });
    Ok(ComparisonRow {
        fraction,
        train_size: train.sample_count(),
        family,
        kernel,
        cluster_count: (kind == RandomKernel::Crrbf).then_some(best.cluster_count),
        trade_off: best.trade_off,
        accuracy: row.cells[ci].accuracy,
        mean_kappa: row.cells[ci].mean_kappa,
        cv_accuracy: None,
        converged: table.all_converged(),
        grid: None,
        trials: Some(table),
    })
}

/// Best cell of the results; ties keep the first in table order.
pub fn best_parameters(results: &ScenarioResults) -> Option<BestParameters> {
    match results {
        ScenarioResults::ClusterSweep { table } => {
            if table.rows.is_empty() {
                return None;
            }
            let b = table.best();
            Some(BestParameters {
                family: KernelFamily::Crrbf,
                fraction: None,
                cluster_count: Some(b.cluster_count),
                trade_off: b.trade_off,
                mean_accuracy: b.mean_accuracy,
                mean_kappa: b.mean_kappa,
            })
        }
        ScenarioResults::FractionSweep { sweep, .. } => {
            let mut best: Option<&model_selection::FractionRow> = None;
            for row in &sweep.rows {
                if best.is_none_or(|b| row.accuracy.mean > b.accuracy.mean) {
                    best = Some(row);
                }
            }
            best.map(|row| BestParameters {
                family: KernelFamily::Crrbf,
                fraction: Some(row.fraction),
                cluster_count: Some(sweep.cluster_count),
                trade_off: sweep.trade_off,
                mean_accuracy: row.accuracy.mean,
                mean_kappa: row.mean_kappa,
            })
        }
        ScenarioResults::KernelComparison { rows } => {
            let mut best: Option<&ComparisonRow> = None;
            for row in rows {
                if best.is_none_or(|b| row.accuracy.mean > b.accuracy.mean) {
                    best = Some(row);
                }
            }
            best.map(|row| BestParameters {
                family: row.family,
                fraction: Some(row.fraction),
                cluster_count: row.cluster_count,
                trade_off: row.trade_off,
                mean_accuracy: row.accuracy.mean,
                mean_kappa: row.mean_kappa,
            })
        }
    }
}

/// Deterministic score table. Timing is excluded.
pub fn scores_csv(report: &ExperimentReport) -> String {
    let mut out = String::new();
    match &report.results {
        ScenarioResults::ClusterSweep { table } => {
            out.push_str("cluster_count,trade_off,mean_accuracy,std_accuracy,mean_kappa,repeats\n");
            for row in &table.rows {
                for (c, cell) in table.trade_offs.iter().zip(&row.cells) {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        row.cluster_count,
                        c,
                        cell.accuracy.mean,
                        cell.accuracy.std,
                        cell.mean_kappa,
                        cell.accuracy.count
                    );
                }
            }
        }
        ScenarioResults::FractionSweep { sweep, .. } => {
            out.push_str(
                "fraction,train_size,cluster_count,trade_off,mean_accuracy,std_accuracy,mean_kappa,repeats\n",
            );
            for row in &sweep.rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    row.fraction,
                    row.train_size,
                    sweep.cluster_count,
                    sweep.trade_off,
                    row.accuracy.mean,
                    row.accuracy.std,
                    row.mean_kappa,
                    row.accuracy.count
                );
            }
        }
        ScenarioResults::KernelComparison { rows } => {
            out.push_str(
                "fraction,train_size,family,parameter,trade_off,mean_accuracy,std_accuracy,mean_kappa,trials,converged\n",
            );
            for row in rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{}",
                    row.fraction,
                    row.train_size,
                    row.family,
                    row.parameter(),
                    row.trade_off,
                    row.accuracy.mean,
                    row.accuracy.std,
                    row.mean_kappa,
                    row.accuracy.count,
                    row.converged
                );
            }
        }
    }
    out
}

pub fn timing_csv(timing: &TimingRecord) -> String {
    let mut out = String::from("stage,seconds\n");
    for e in &timing.entries {
        let _ = writeln!(out, "{},{}", e.stage, e.seconds);
    }
    out
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

fn pct_pm(s: &TrialStats) -> String {
    format!("{}±{}", pct(s.mean), pct(s.std))
}

fn table_text(header: &[String], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| -> String {
        let mut s = String::new();
        for (i, c) in cells.iter().enumerate().take(cols) {
            let pad = widths[i] - c.chars().count();
            if i > 0 {
                s.push_str("  ");
            }
            if i == 0 {
                s.push_str(c);
                s.push_str(&" ".repeat(pad));
            } else {
                s.push_str(&" ".repeat(pad));
                s.push_str(c);
            }
        }
        let trimmed = s.trim_end().len();
        s.truncate(trimmed);
        s.push('\n');
        s
    };
    let mut out = line(header);
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * cols.saturating_sub(1)));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r));
    }
    out
}

/// Text tables for a stored report. Accuracies are percentages; OA and
/// kappa are printed to two decimals.
pub fn render_report(report: &ExperimentReport) -> String {
    let mut out = String::new();
    let cfg = &report.config;
    let _ = writeln!(
        out,
        "crrbf {} report (format {})",
        report.tool_version, report.format_version
    );
    let _ = writeln!(out, "scenario: {}", cfg.scenario.name());
    let _ = writeln!(out, "seed: {}", cfg.seed);
    let data = &report.data;
    let _ = writeln!(
        out,
        "data: {} train / {} test samples, {} bands, {} classes, standardized: {}",
        data.train_samples, data.test_samples, data.band_count, data.class_count, data.standardized
    );
    if !report.complete {
        out.push_str("status: INCOMPLETE (interrupted; partial results)\n");
    }
    if !report.converged {
        out.push_str("warning: at least one solver run did not converge\n");
    }
    out.push('\n');
    match &report.results {
        ScenarioResults::ClusterSweep { table } => render_cluster_sweep(&mut out, table),
        ScenarioResults::FractionSweep {
            sweep,
            parameter_source,
        } => {
            let _ = writeln!(
                out,
                "Training-fraction sweep, CRRBF k={} C={} (from {}), {} repeats",
                sweep.cluster_count, sweep.trade_off, parameter_source, sweep.repeats
            );
            let header = ["fraction", "train", "OA %", "kappa"].map(String::from);
            let rows: Vec<Vec<String>> = sweep
                .rows
                .iter()
                .map(|r| {
                    vec![
                        format!("{}", r.fraction),
                        r.train_size.to_string(),
                        pct_pm(&r.accuracy),
                        format!("{:.2}", r.mean_kappa),
                    ]
                })
                .collect();
            out.push_str(&table_text(&header, &rows));
        }
        ScenarioResults::KernelComparison { rows } => {
            out.push_str("Kernel comparison (test set)\n");
            let header = [
                "fraction",
                "train",
                "family",
                "parameter",
                "C",
                "OA %",
                "kappa",
            ]
            .map(String::from);
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        format!("{}", r.fraction),
                        r.train_size.to_string(),
                        r.family.to_string(),
                        r.parameter(),
                        format!("{}", r.trade_off),
                        if r.accuracy.count > 1 {
                            pct_pm(&r.accuracy)
                        } else {
                            pct(r.accuracy.mean)
                        },
                        format!("{:.2}", r.mean_kappa),
                    ]
                })
                .collect();
            out.push_str(&table_text(&header, &body));
        }
    }
    out.push('\n');
    match &report.best {
        Some(b) => {
            out.push_str("Best parameters\n");
            let _ = writeln!(out, "  family: {}", b.family);
            if let Some(f) = b.fraction {
                let _ = writeln!(out, "  fraction: {f}");
            }
            if let Some(k) = b.cluster_count {
                let _ = writeln!(out, "  cluster count: {k}");
            }
            let _ = writeln!(out, "  C: {}", b.trade_off);
            let _ = writeln!(out, "  OA: {} %", pct(b.mean_accuracy));
            let _ = writeln!(out, "  kappa: {:.2}", b.mean_kappa);
        }
        None => out.push_str("Best parameters: none (no completed results)\n"),
    }
    out.push('\n');
    match &report.timing {
        Some(t) => {
            out.push_str("Timing (wall clock, seconds)\n");
            let rows: Vec<Vec<String>> = t
                .entries
                .iter()
                .map(|e| vec![e.stage.clone(), format!("{:.3}", e.seconds)])
                .collect();
            out.push_str(&table_text(
                &["stage".to_string(), "seconds".to_string()],
                &rows,
            ));
        }
        None => out.push_str("Timing: not recorded in this report; table omitted.\n"),
    }
    out
}

fn render_cluster_sweep(out: &mut String, table: &TrialTable) {
    let _ = writeln!(
        out,
        "CRRBF test OA % (mean±std over {} trials) by cluster count × C",
        table.repeats
    );
    let mut header = vec!["k".to_string()];
    header.extend(table.trade_offs.iter().map(|c| format!("C={c}")));
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            let mut v = vec![r.cluster_count.to_string()];
            v.extend(r.cells.iter().map(|c| pct_pm(&c.accuracy)));
            v
        })
        .collect();
    out.push_str(&table_text(&header, &rows));
    out.push('\n');
    out.push_str("Maximum accuracy per cluster count\n");
    let header = [
        "k",
        "best C",
        "OA % (max of means)",
        "kappa",
        "OA % (mean of trial maxima)",
    ]
    .map(String::from);
    let rows: Vec<Vec<String>> = table
        .max_over_trade_offs()
        .iter()
        .zip(&table.rows)
        .map(|(b, r)| {
            vec![
                b.cluster_count.to_string(),
                format!("{}", b.trade_off),
                pct(b.mean_accuracy),
                format!("{:.2}", b.mean_kappa),
                pct(r.mean_of_trial_maxima()),
            ]
        })
        .collect();
    out.push_str(&table_text(&header, &rows));
    if let Ok(s) = table.cluster_count_spread() {
        let _ = writeln!(
            out,
            "spread across cluster counts: sample std {} pts, population std {} pts",
            pct(s.std),
            pct(s.population_std)
        );
    }
}

/// Files written by [`write_outputs`].
pub const OUTPUT_FILES: [&str; 5] = [
    "scores.csv",
    "timing.csv",
    "report.txt",
    "report.json",
    "kernels.json",
];

pub fn write_outputs(report: &ExperimentReport, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, text: String| {
        let p = dir.join(name);
        fs::write(&p, text).map_err(|e| Error::io(p, e))
    };
    write("scores.csv", scores_csv(report))?;
    write(
        "timing.csv",
        timing_csv(report.timing.as_ref().unwrap_or(&TimingRecord::default())),
    )?;
    write("report.txt", render_report(report))?;
    write("report.json", report.to_json()?)?;
    write(
        "kernels.json",
        serde_json::to_string_pretty(&report.kernels())?,
    )?;
    Ok(())
}

/// Result of [`cmd_experiment`]: the report and the process exit code.
#[derive(Debug)]
pub struct RunSummary {
    pub report: ExperimentReport,
    pub output_dir: PathBuf,
    pub exit_code: i32,
}

/// Loads the config, applies overrides, runs and writes every output file.
pub fn cmd_experiment(
    config_path: impl AsRef<Path>,
    overrides: &Overrides,
    cancel: &CancelFlag,
) -> std::result::Result<RunSummary, Failure> {
    let mut config = ExperimentConfig::load(config_path).map_err(Failure::config)?;
    overrides.apply(&mut config);
    let report = run_experiment(&config, cancel)?;
    write_outputs(&report, &config.output_dir).map_err(Failure::runtime)?;
    let exit_code = if !report.complete {
        EXIT_INTERRUPTED
    } else if !report.converged {
        EXIT_NON_CONVERGENCE
    } else {
        0
    };
    Ok(RunSummary {
        report,
        output_dir: config.output_dir,
        exit_code,
    })
}

/// Clusters the bands of a dataset file and writes `band_index,cluster_id`
/// lines to `out`.
pub fn cmd_cluster(
    data: impl AsRef<Path>,
    k: usize,
    seed: u64,
    out: impl AsRef<Path>,
) -> std::result::Result<BandClustering, Failure> {
    let ds = load_dataset(data).map_err(Failure::data)?;
    let c = cluster_bands(&ds, k, seed).map_err(Failure::config)?;
    c.write(out).map_err(Failure::runtime)?;
    Ok(c)
}

/// Renders a stored report without recomputation.
pub fn cmd_report(path: impl AsRef<Path>) -> std::result::Result<String, Failure> {
    let report = ExperimentReport::load(path).map_err(Failure::classify)?;
    Ok(render_report(&report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic_config() -> ExperimentConfig {
        ExperimentConfig::from_json(
            r#"{
                "scenario": "cluster_sweep",
                "data": {
                    "synthetic": {
                        "class_count": 3, "samples_per_class": 12, "band_count": 12,
                        "spectral_smoothness": 0.9, "class_separation": 1.0,
                        "noise_std": 0.3, "seed": 5
                    }
                },
                "trade_offs": [1, 10],
                "plan": { "cluster_counts": [2, 3], "repeats": 2 }
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn defaults_match_protocol() {
        let cfg = synthetic_config();
        assert_eq!(cfg.grid.rbf_gammas.len(), 21);
        assert_eq!(cfg.fractions.values, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.75]);
        assert_eq!(cfg.grid.fold_count, 5);
        assert!(!cfg.standardize_enabled());
        assert_eq!(cfg.data.train_fraction, 0.5);
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let mut cfg = synthetic_config();
        cfg.scenario = Scenario::KernelComparison;
        cfg.families = vec!["rbf".into(), "gaussian".into()];
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("gaussian"), "{msg}");
        for name in ["linear", "polynomial", "rbf", "rrbf", "crrbf"] {
            assert!(msg.contains(name), "{msg}");
        }

        let mut cfg = synthetic_config();
        cfg.data.train = Some("/definitely/missing.csv".into());
        assert!(cfg.validate().is_err());

        let mut cfg = synthetic_config();
        cfg.scenario = Scenario::FractionSweep;
        assert!(cfg.validate().is_err());
        cfg.fractions.cluster_count = Some(2);
        cfg.fractions.trade_off = Some(4.0);
        cfg.validate().unwrap();

        assert!(ExperimentConfig::from_json(
            r#"{"scenario": "cluster_sweep", "data": {}, "typo": 1}"#
        )
        .is_err());
    }

    #[test]
    fn cluster_sweep_report_is_consistent() {
        let cfg = synthetic_config();
        let report = run_experiment(&cfg, &AtomicBool::new(false)).unwrap();
        assert!(report.complete);
        let ScenarioResults::ClusterSweep { table } = &report.results else {
            panic!("wrong scenario");
        };
        assert_eq!(table.rows.len(), 2);
        assert!(table.rows.iter().all(|r| r.cells.len() == 2));
        let best = report.best.as_ref().unwrap();
        let max = table
            .rows
            .iter()
            .flat_map(|r| r.cells.iter().map(|c| c.accuracy.mean))
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(best.mean_accuracy, max);
        assert_eq!(scores_csv(&report).lines().count(), 1 + 4);
        assert_eq!(report.kernels().len(), 4);

        let text = report.to_json().unwrap();
        let back = ExperimentReport::from_json(&text).unwrap();
        assert_eq!(back, report);
        assert_eq!(render_report(&back), render_report(&report));
    }

    #[test]
    fn interrupted_run_is_partial() {
        let cfg = synthetic_config();
        let report = run_experiment(&cfg, &AtomicBool::new(true)).unwrap();
        assert!(!report.complete);
        assert!(report.best.is_none());
        assert!(render_report(&report).contains("INCOMPLETE"));
    }

    #[test]
    fn version_mismatch_and_missing_timing() {
        let cfg = synthetic_config();
        let mut report = run_experiment(&cfg, &AtomicBool::new(false)).unwrap();
        let mut value: serde_json::Value =
            serde_json::from_str(&report.to_json().unwrap()).unwrap();
        value["format_version"] = serde_json::json!(99);
        let err = ExperimentReport::from_json(&value.to_string()).unwrap_err();
        assert!(matches!(err, Error::VersionMismatch { found: 99, .. }));

        report.timing = None;
        let text = render_report(&report);
        assert!(text.contains("Timing: not recorded"));
    }
}
