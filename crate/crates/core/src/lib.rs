//! # crrbf
//!
//! Kernel SVM classification for high-dimensional spectral data built around
//! the cluster-based random RBF (CRRBF) kernel.
//!
//! The CRRBF kernel groups the spectral bands of a dataset into `k` clusters
//! with K-Means, draws one random bandwidth per cluster and evaluates
//!
//! ```text
//! K(x, y) = exp(-Σ_k γ_k Σ_{i ∈ C_k} (x_i - y_i)²)
//! ```
//!
//! which leaves the cluster count as the only parameter to choose. Linear,
//! polynomial, RBF and per-band random RBF (RRBF) kernels are provided as
//! baselines.
//!
//! ## Modules
//!
//! - [`dataset`]: CSV loading, stratified subsampling, synthetic AR(1) spectra,
//!   standardization.
//! - [`band_clustering`]: K-Means (k-means++ seeding) over band profiles.
//! - [`kernels`]: kernel specs, random bandwidth sampling, Gram matrices.
//! - [`svm`]: SMO solver on precomputed Gram matrices, one-vs-one multiclass.
//! - [`model_selection`]: stratified k-fold CV, grid search, repeated
//!   random-kernel trials, training-fraction sweeps.
//! - [`metrics`]: confusion matrices, overall accuracy, Cohen's kappa, timing.
//! - [`experiment`]: config-driven experiment runner and report rendering
//!   used by the `crrbf` binary.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod band_clustering;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod kernels;
pub mod metrics;
pub mod model_selection;
pub mod seed;
pub mod svm;

pub use band_clustering::{cluster_bands, kmeans, BandClustering, KMeansConfig, KMeansResult};
pub use dataset::{LabeledDataset, Standardizer, SyntheticSpec};
pub use error::{Error, Result};
pub use kernels::{GammaSampler, KernelFamily, KernelSpec};
pub use metrics::{ConfusionMatrix, TimingRecord};
pub use svm::{BinarySvmModel, MulticlassSvmModel, TrainConfig};
