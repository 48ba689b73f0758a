//! Partitioning spectral bands into clusters with K-Means.
//!
//! Each band is represented by its z-scored values across the training
//! samples, so bands that move together end up in the same cluster
//! regardless of their offset or gain.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{LabeledDataset, CONSTANT_BAND_STD};
use crate::error::{Error, Result};
use crate::seed;

/// A partition of `d` band indices into `k` non-empty clusters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawClustering", into = "RawClustering")]
pub struct BandClustering {
    assignments: Vec<usize>,
    cluster_count: usize,
}

#[derive(Serialize, Deserialize)]
struct RawClustering {
    assignments: Vec<usize>,
    cluster_count: usize,
}

impl TryFrom<RawClustering> for BandClustering {
    type Error = Error;

    fn try_from(raw: RawClustering) -> Result<Self> {
        let c = BandClustering::new(raw.assignments)?;
        if c.cluster_count != raw.cluster_count {
            return Err(Error::validation(format!(
                "clustering declares {} clusters but assignments use {}",
                raw.cluster_count, c.cluster_count
            )));
        }
        Ok(c)
    }
}

impl From<BandClustering> for RawClustering {
    fn from(c: BandClustering) -> Self {
        RawClustering {
            assignments: c.assignments,
            cluster_count: c.cluster_count,
        }
    }
}

impl BandClustering {
    /// Validates that the ids are dense: every id in `0..=max` is used.
    pub fn new(assignments: Vec<usize>) -> Result<Self> {
        let Some(&max) = assignments.iter().max() else {
            return Err(Error::argument("a clustering needs at least one band"));
        };
        let cluster_count = max + 1;
        let mut used = vec![false; cluster_count];
        for &a in &assignments {
            used[a] = true;
        }
        if let Some(empty) = used.iter().position(|u| !u) {
            return Err(Error::validation(format!(
                "cluster {empty} of {cluster_count} has no bands"
            )));
        }
        Ok(Self {
            assignments,
            cluster_count,
        })
    }

    /// Every band in its own cluster, cluster id = band index.
    pub fn singletons(band_count: usize) -> Self {
        Self {
            assignments: (0..band_count).collect(),
            cluster_count: band_count,
        }
    }

    /// All bands in cluster 0.
    pub fn single(band_count: usize) -> Self {
        Self {
            assignments: vec![0; band_count],
            cluster_count: 1,
        }
    }

    /// Relabels clusters in order of their lowest band index.
    pub fn canonical(&self) -> Self {
        let mut map = vec![usize::MAX; self.cluster_count];
        let mut next = 0;
        let assignments = self
            .assignments
            .iter()
            .map(|&a| {
                if map[a] == usize::MAX {
                    map[a] = next;
                    next += 1;
                }
                map[a]
            })
            .collect();
        Self {
            assignments,
            cluster_count: self.cluster_count,
        }
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn cluster_count(&self) -> usize {
        self.cluster_count
    }

    pub fn band_count(&self) -> usize {
        self.assignments.len()
    }

    /// Band indices of each cluster, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.cluster_count];
        for (band, &c) in self.assignments.iter().enumerate() {
            out[c].push(band);
        }
        out
    }

    /// `band_index,cluster_id` lines.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for (band, c) in self.assignments.iter().enumerate() {
            let _ = writeln!(s, "{band},{c}");
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: None,
                line: i + 1,
                message,
            };
            let (band, cluster) = line
                .split_once(',')
                .ok_or_else(|| parse_err("expected 'band_index,cluster_id'".into()))?;
            let band: usize = band
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("bad band index '{band}'")))?;
            let cluster: usize = cluster
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("bad cluster id '{cluster}'")))?;
            pairs.push((band, cluster));
        }
        pairs.sort_unstable();
        if pairs.iter().enumerate().any(|(i, &(band, _))| band != i) {
            return Err(Error::validation(
                "clustering file must list every band index 0..d exactly once",
            ));
        }
        Self::new(pairs.into_iter().map(|(_, c)| c).collect())
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text).map_err(|e| match e {
            Error::Parse { line, message, .. } => Error::Parse {
                path: Some(path.to_path_buf()),
                line,
                message,
            },
            other => other,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    /// Stop once no centroid moves farther than this (Euclidean).
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Independent k-means++ restarts; the lowest inertia wins.
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    pub seed: u64,
}

fn default_max_iterations() -> usize {
    100
}

fn default_tolerance() -> f64 {
    1e-6
}

fn default_restarts() -> usize {
    1
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            max_iterations: default_max_iterations(),
            tolerance: default_tolerance(),
            restarts: default_restarts(),
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::argument("k-means needs k >= 1"));
        }
        if self.max_iterations < 1 {
            return Err(Error::argument("k-means needs max_iterations >= 1"));
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return Err(Error::argument("k-means tolerance must be >= 0"));
        }
        if self.restarts < 1 {
            return Err(Error::argument("k-means needs restarts >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// Cluster id per input row; every id in `0..k` is used.
    pub assignments: Vec<usize>,
    /// `k × n` centroid matrix.
    pub centroids: Array2<f64>,
    /// Sum of squared distances to the assigned centroid.
    pub inertia: f64,
    /// Inertia after every Lloyd iteration of the winning restart.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Per-band z-scored profiles: row `i` holds band `i` across all samples.
/// Constant bands become all-zero rows.
pub fn band_points(ds: &LabeledDataset) -> Array2<f64> {
    let x = ds.features();
    let n = x.nrows() as f64;
    let mut out = x.t().to_owned();
    for mut row in out.rows_mut() {
        let mean = row.sum() / n;
        let std = (row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        if std < CONSTANT_BAND_STD {
            row.fill(0.0);
        } else {
            row.mapv_inplace(|v| (v - mean) / std);
        }
    }
    out
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's algorithm with k-means++ seeding.
///
/// Clusters that empty out are refilled with the point farthest from its
/// current centroid (taken from a cluster with more than one member), so the
/// result always uses all `k` ids. Deterministic given `config.seed`.
pub fn kmeans(points: &Array2<f64>, config: &KMeansConfig) -> Result<KMeansResult> {
    config.validate()?;
    let m = points.nrows();
    if config.k > m {
        return Err(Error::argument(format!(
            "k-means asked for {} clusters but there are only {m} points",
            config.k
        )));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::argument("k-means points must be finite"));
    }
    let mut best: Option<KMeansResult> = None;
    for restart in 0..config.restarts {
        let mut rng = seed::rng(seed::derive(config.seed, &[restart as u64]));
        let init = kmeans_plus_plus(points, config.k, &mut rng);
        let run = lloyd(points, init, config);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("restarts >= 1"))
}

fn kmeans_plus_plus<R: Rng>(points: &Array2<f64>, k: usize, rng: &mut R) -> Array2<f64> {
    let m = points.nrows();
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..m));
    let mut nearest: Vec<f64> = (0..m)
        .map(|i| sq_dist(points.row(i), points.row(chosen[0])))
        .collect();
    while chosen.len() < k {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &w) in nearest.iter().enumerate() {
                if w > 0.0 {
                    pick = Some(i);
                    if target < w {
                        break;
                    }
                    target -= w;
                }
            }
            pick.expect("positive total weight")
        } else {
            // All remaining points coincide with a chosen centre.
            let free: Vec<usize> = (0..m).filter(|i| !chosen.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.row(i), points.row(next)));
        }
    }
    let mut centroids = Array2::zeros((k, points.ncols()));
    for (c, &i) in chosen.iter().enumerate() {
        centroids.row_mut(c).assign(&points.row(i));
    }
    centroids
}

fn assign(points: &Array2<f64>, centroids: &Array2<f64>) -> (Vec<usize>, Vec<f64>) {
    let mut assignments = Vec::with_capacity(points.nrows());
    let mut dists = Vec::with_capacity(points.nrows());
    for p in points.rows() {
        let (best, dist) = centroids
            .rows()
            .into_iter()
            .map(|c| sq_dist(p, c))
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (j, d)| if d < acc.1 { (j, d) } else { acc },
            );
        assignments.push(best);
        dists.push(dist);
    }
    (assignments, dists)
}

fn repair_empty(assignments: &mut [usize], dists: &mut [f64], k: usize) {
    let mut sizes = vec![0usize; k];
    for &a in assignments.iter() {
        sizes[a] += 1;
    }
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let donor = (0..assignments.len())
            .filter(|&i| sizes[assignments[i]] > 1)
            .fold(None, |acc: Option<usize>, i| match acc {
                Some(j) if dists[j] >= dists[i] => Some(j),
                _ => Some(i),
            })
            .expect("k <= m leaves a cluster with a spare point");
        sizes[assignments[donor]] -= 1;
        sizes[empty] += 1;
        assignments[donor] = empty;
        dists[donor] = 0.0;
    }
}

fn centroids_of(points: &Array2<f64>, assignments: &[usize], k: usize) -> Array2<f64> {
    let mut sums = Array2::<f64>::zeros((k, points.ncols()));
    let mut counts = vec![0usize; k];
    for (p, &a) in points.rows().into_iter().zip(assignments) {
        let mut row = sums.row_mut(a);
        row += &p;
        counts[a] += 1;
    }
    for (mut row, &n) in sums.rows_mut().into_iter().zip(&counts) {
        row /= n as f64;
    }
    sums
}

fn inertia_of(points: &Array2<f64>, assignments: &[usize], centroids: &Array2<f64>) -> f64 {
    points
        .rows()
        .into_iter()
        .zip(assignments)
        .map(|(p, &a)| sq_dist(p, centroids.row(a)))
        .sum()
}

fn lloyd(points: &Array2<f64>, mut centroids: Array2<f64>, config: &KMeansConfig) -> KMeansResult {
    let k = centroids.nrows();
    let mut history = Vec::new();
    let mut assignments = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iterations {
        iterations += 1;
        let (mut a, mut dists) = assign(points, &centroids);
        repair_empty(&mut a, &mut dists, k);
        let updated = centroids_of(points, &a, k);
        let shift = updated
            .rows()
            .into_iter()
            .zip(centroids.rows())
            .map(|(u, c)| sq_dist(u, c).sqrt())
            .fold(0.0, f64::max);
        centroids = updated;
        assignments = a;
        history.push(inertia_of(points, &assignments, &centroids));
        if shift < config.tolerance || shift == 0.0 {
            converged = true;
            break;
        }
    }
    KMeansResult {
        inertia: *history.last().expect("at least one iteration"),
        assignments,
        centroids,
        inertia_history: history,
        iterations,
        converged,
    }
}

/// Clusters the bands of `ds` into `k` groups (ids canonicalized by lowest
/// band index).
pub fn cluster_bands(ds: &LabeledDataset, k: usize, seed: u64) -> Result<BandClustering> {
    cluster_bands_with(ds, &KMeansConfig::new(k, seed))
}

pub fn cluster_bands_with(ds: &LabeledDataset, config: &KMeansConfig) -> Result<BandClustering> {
    let d = ds.band_count();
    if config.k < 1 || config.k > d {
        return Err(Error::argument(format!(
            "cluster count must lie in 1..={d} (band count), got {}",
            config.k
        )));
    }
    let result = kmeans(&band_points(ds), config)?;
    Ok(BandClustering::new(result.assignments)?.canonical())
}

/// Number of bands in each cluster.
pub fn cluster_sizes(c: &BandClustering) -> Array1<usize> {
    c.members().iter().map(Vec::len).collect()
}
