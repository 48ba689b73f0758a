//! Kernel functions, random bandwidth sampling and Gram matrices.
//!
//! | family       | `K(x, y)`                                      |
//! |--------------|------------------------------------------------|
//! | `linear`     | `⟨x, y⟩`                                       |
//! | `polynomial` | `(⟨x, y⟩ + 1)^p`                               |
//! | `rbf`        | `exp(-γ ‖x - y‖²)`                             |
//! | `rrbf`       | `exp(-Σ_i γ_i (x_i - y_i)²)`, one γ per band    |
//! | `crrbf`      | `exp(-Σ_k γ_k Σ_{i ∈ C_k} (x_i - y_i)²)`       |
//!
//! The CRRBF exponent is accumulated per cluster (bands in ascending order)
//! and then weighted, so a one-cluster CRRBF reproduces RBF bit for bit and
//! a singleton CRRBF with identity ids reproduces RRBF bit for bit.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::band_clustering::BandClustering;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    Linear,
    Polynomial {
        degree: u32,
    },
    Rbf {
        gamma: f64,
    },
    Rrbf {
        gammas: Vec<f64>,
    },
    Crrbf {
        clustering: BandClustering,
        gammas: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    Linear,
    Polynomial,
    Rbf,
    Rrbf,
    Crrbf,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 5] = [
        KernelFamily::Linear,
        KernelFamily::Polynomial,
        KernelFamily::Rbf,
        KernelFamily::Rrbf,
        KernelFamily::Crrbf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Linear => "linear",
            KernelFamily::Polynomial => "polynomial",
            KernelFamily::Rbf => "rbf",
            KernelFamily::Rrbf => "rrbf",
            KernelFamily::Crrbf => "crrbf",
        }
    }

    /// Families whose parameters are drawn at random instead of tuned.
    pub fn is_random(self) -> bool {
        matches!(self, KernelFamily::Rrbf | KernelFamily::Crrbf)
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        KernelFamily::ALL
            .into_iter()
            .find(|f| f.name() == lower)
            .ok_or_else(|| {
                let valid: Vec<&str> = KernelFamily::ALL.iter().map(|f| f.name()).collect();
                Error::validation(format!(
                    "unknown kernel family '{s}'; valid families: {}",
                    valid.join(", ")
                ))
            })
    }
}

fn check_gamma(g: f64) -> Result<()> {
    if g > 0.0 && g.is_finite() {
        Ok(())
    } else {
        Err(Error::argument(format!(
            "kernel bandwidths must be positive and finite, got {g}"
        )))
    }
}

impl KernelSpec {
    pub fn family(&self) -> KernelFamily {
        match self {
            KernelSpec::Linear => KernelFamily::Linear,
            KernelSpec::Polynomial { .. } => KernelFamily::Polynomial,
            KernelSpec::Rbf { .. } => KernelFamily::Rbf,
            KernelSpec::Rrbf { .. } => KernelFamily::Rrbf,
            KernelSpec::Crrbf { .. } => KernelFamily::Crrbf,
        }
    }

    /// Checks parameter ranges and, when `band_count` is given, that the
    /// spec fits data with that many bands.
    pub fn validate(&self, band_count: Option<usize>) -> Result<()> {
        match self {
            KernelSpec::Linear => {}
            KernelSpec::Polynomial { degree } => {
                if *degree < 1 {
                    return Err(Error::argument("polynomial degree must be >= 1"));
                }
            }
            KernelSpec::Rbf { gamma } => check_gamma(*gamma)?,
            KernelSpec::Rrbf { gammas } => {
                gammas.iter().try_for_each(|&g| check_gamma(g))?;
                if let Some(d) = band_count {
                    if gammas.len() != d {
                        return Err(Error::argument(format!(
                            "rrbf has {} bandwidths but data has {d} bands",
                            gammas.len()
                        )));
                    }
                }
            }
            KernelSpec::Crrbf { clustering, gammas } => {
                gammas.iter().try_for_each(|&g| check_gamma(g))?;
                if gammas.len() != clustering.cluster_count() {
                    return Err(Error::argument(format!(
                        "crrbf has {} bandwidths for {} clusters",
                        gammas.len(),
                        clustering.cluster_count()
                    )));
                }
                if let Some(d) = band_count {
                    if clustering.band_count() != d {
                        return Err(Error::argument(format!(
                            "crrbf clustering covers {} bands but data has {d}",
                            clustering.band_count()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Every member of the RBF family has `K(x, x) = 1`.
    pub fn is_rbf_family(&self) -> bool {
        matches!(
            self,
            KernelSpec::Rbf { .. } | KernelSpec::Rrbf { .. } | KernelSpec::Crrbf { .. }
        )
    }

    /// Short human-readable description.
    pub fn describe(&self) -> String {
        match self {
            KernelSpec::Linear => "linear".into(),
            KernelSpec::Polynomial { degree } => format!("polynomial(degree={degree})"),
            KernelSpec::Rbf { gamma } => format!("rbf(gamma={gamma})"),
            KernelSpec::Rrbf { gammas } => format!("rrbf({} bandwidths)", gammas.len()),
            KernelSpec::Crrbf { clustering, .. } => {
                format!("crrbf({} clusters)", clustering.cluster_count())
            }
        }
    }
}

fn check_len(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() == y.len() {
        Ok(())
    } else {
        Err(Error::argument(format!(
            "vector lengths differ: {} vs {}",
            x.len(),
            y.len()
        )))
    }
}

#[inline]
fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[inline]
fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let d = a - b;
            d * d
        })
        .sum()
}

pub fn eval_linear(x: &[f64], y: &[f64]) -> Result<f64> {
    check_len(x, y)?;
    Ok(dot(x, y))
}

pub fn eval_polynomial(x: &[f64], y: &[f64], degree: u32) -> Result<f64> {
    check_len(x, y)?;
    if degree < 1 {
        return Err(Error::argument("polynomial degree must be >= 1"));
    }
    Ok(poly(dot(x, y), degree))
}

#[inline]
fn poly(inner: f64, degree: u32) -> f64 {
    (inner + 1.0).powi(degree as i32)
}

pub fn eval_rbf(x: &[f64], y: &[f64], gamma: f64) -> Result<f64> {
    check_len(x, y)?;
    check_gamma(gamma)?;
    Ok((-gamma * sq_dist(x, y)).exp())
}

pub fn eval_rrbf(x: &[f64], y: &[f64], gammas: &[f64]) -> Result<f64> {
    check_len(x, y)?;
    check_len(x, gammas)?;
    gammas.iter().try_for_each(|&g| check_gamma(g))?;
    Ok(rrbf(x, y, gammas))
}

#[inline]
fn rrbf(x: &[f64], y: &[f64], gammas: &[f64]) -> f64 {
    let exponent: f64 = x
        .iter()
        .zip(y)
        .zip(gammas)
        .map(|((a, b), g)| {
            let d = a - b;
            g * (d * d)
        })
        .sum();
    (-exponent).exp()
}

pub fn eval_crrbf(
    x: &[f64],
    y: &[f64],
    clustering: &BandClustering,
    gammas: &[f64],
) -> Result<f64> {
    check_len(x, y)?;
    let spec = KernelSpec::Crrbf {
        clustering: clustering.clone(),
        gammas: gammas.to_vec(),
    };
    spec.validate(Some(x.len()))?;
    let layout = ClusterLayout::new(clustering, gammas);
    Ok(layout.eval(x, y))
}

/// Bands regrouped so each cluster is a contiguous run.
#[derive(Debug, Clone)]
struct ClusterLayout {
    /// `order[p]` is the original band at permuted position `p`.
    order: Vec<usize>,
    /// `(end, gamma)` per cluster in cluster-id order; runs are contiguous.
    runs: Vec<(usize, f64)>,
}

impl ClusterLayout {
    fn new(clustering: &BandClustering, gammas: &[f64]) -> Self {
        let mut order = Vec::with_capacity(clustering.band_count());
        let mut runs = Vec::with_capacity(clustering.cluster_count());
        for (members, &g) in clustering.members().into_iter().zip(gammas) {
            order.extend(members);
            runs.push((order.len(), g));
        }
        Self { order, runs }
    }

    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut exponent = 0.0;
        let mut start = 0;
        for &(end, gamma) in &self.runs {
            let partial: f64 = self.order[start..end]
                .iter()
                .map(|&i| {
                    let d = x[i] - y[i];
                    d * d
                })
                .sum();
            exponent += gamma * partial;
            start = end;
        }
        (-exponent).exp()
    }

    /// Evaluates on rows already permuted into cluster order.
    #[inline]
    fn eval_permuted(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut exponent = 0.0;
        let mut start = 0;
        for &(end, gamma) in &self.runs {
            exponent += gamma * sq_dist(&x[start..end], &y[start..end]);
            start = end;
        }
        (-exponent).exp()
    }
}

/// Evaluates any kernel spec on one pair of vectors.
pub fn eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    check_len(x, y)?;
    spec.validate(Some(x.len()))?;
    Ok(match spec {
        KernelSpec::Linear => dot(x, y),
        KernelSpec::Polynomial { degree } => poly(dot(x, y), *degree),
        KernelSpec::Rbf { gamma } => (-gamma * sq_dist(x, y)).exp(),
        KernelSpec::Rrbf { gammas } => rrbf(x, y, gammas),
        KernelSpec::Crrbf { clustering, gammas } => {
            ClusterLayout::new(clustering, gammas).eval(x, y)
        }
    })
}

/// Uniform bandwidth distribution on `(low, high]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaSampler {
    #[serde(default)]
    pub low: f64,
    #[serde(default = "default_high")]
    pub high: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_high() -> f64 {
    1.0
}

impl Default for GammaSampler {
    fn default() -> Self {
        Self {
            low: 0.0,
            high: 1.0,
            seed: 0,
        }
    }
}

impl GammaSampler {
    pub fn new(low: f64, high: f64, seed: u64) -> Result<Self> {
        let s = Self { low, high, seed };
        s.validate()?;
        Ok(s)
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.low >= 0.0 && self.low < self.high && self.high.is_finite()) {
            return Err(Error::argument(format!(
                "bandwidth range needs 0 <= low < high, got ({}, {}]",
                self.low, self.high
            )));
        }
        Ok(())
    }

    /// `count` independent draws. Deterministic given the seed.
    pub fn draw(&self, count: usize) -> Result<Vec<f64>> {
        self.validate()?;
        let mut rng = seed::rng(self.seed);
        let width = self.high - self.low;
        Ok((0..count)
            .map(|_| {
                // u ∈ [0, 1) maps onto (low, high]
                let u: f64 = rng.random();
                self.high - u * width
            })
            .collect())
    }
}

/// RRBF with `band_count` random bandwidths.
pub fn sample_rrbf(band_count: usize, sampler: &GammaSampler) -> Result<KernelSpec> {
    if band_count < 1 {
        return Err(Error::argument("rrbf needs at least one band"));
    }
    Ok(KernelSpec::Rrbf {
        gammas: sampler.draw(band_count)?,
    })
}

/// CRRBF with one random bandwidth per cluster.
pub fn sample_crrbf(clustering: &BandClustering, sampler: &GammaSampler) -> Result<KernelSpec> {
    Ok(KernelSpec::Crrbf {
        clustering: clustering.clone(),
        gammas: sampler.draw(clustering.cluster_count())?,
    })
}

/// Row-major contiguous copy, permuted into cluster order for CRRBF.
fn prepare_rows(spec: &KernelSpec, m: ArrayView2<f64>) -> Array2<f64> {
    match spec {
        KernelSpec::Crrbf { clustering, gammas } => {
            let layout = ClusterLayout::new(clustering, gammas);
            m.select(Axis(1), &layout.order)
                .as_standard_layout()
                .into_owned()
        }
        _ => m.as_standard_layout().into_owned(),
    }
}

struct Evaluator<'a> {
    spec: &'a KernelSpec,
    layout: Option<ClusterLayout>,
}

impl<'a> Evaluator<'a> {
    fn new(spec: &'a KernelSpec) -> Self {
        let layout = match spec {
            KernelSpec::Crrbf { clustering, gammas } => {
                Some(ClusterLayout::new(clustering, gammas))
            }
            _ => None,
        };
        Self { spec, layout }
    }

    #[inline]
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.spec {
            KernelSpec::Linear => dot(x, y),
            KernelSpec::Polynomial { degree } => poly(dot(x, y), *degree),
            KernelSpec::Rbf { gamma } => (-gamma * sq_dist(x, y)).exp(),
            KernelSpec::Rrbf { gammas } => rrbf(x, y, gammas),
            KernelSpec::Crrbf { .. } => self
                .layout
                .as_ref()
                .expect("layout built for crrbf")
                .eval_permuted(x, y),
        }
    }
}

fn check_gram_inputs(spec: &KernelSpec, a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<()> {
    if a.ncols() != b.ncols() {
        return Err(Error::argument(format!(
            "gram inputs have {} and {} columns",
            a.ncols(),
            b.ncols()
        )));
    }
    spec.validate(Some(a.ncols()))
}

/// Kernel matrix with entry `(i, j) = K(a_i, b_j)`.
///
/// If `a` and `b` are views of the same memory the symmetric path is taken.
pub fn gram(spec: &KernelSpec, a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<Array2<f64>> {
    if a.as_ptr() == b.as_ptr() && a.dim() == b.dim() && a.strides() == b.strides() {
        return gram_symmetric(spec, a);
    }
    check_gram_inputs(spec, a, b)?;
    let ev = Evaluator::new(spec);
    let pa = prepare_rows(spec, a);
    let pb = prepare_rows(spec, b);
    let mut out = Array2::zeros((a.nrows(), b.nrows()));
    out.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut row)| {
            let x = pa.row(i);
            let x = x.as_slice().expect("standard layout");
            for (j, v) in row.iter_mut().enumerate() {
                *v = ev.eval(x, pb.row(j).as_slice().expect("standard layout"));
            }
        });
    Ok(out)
}

/// Kernel matrix of `a` against itself; each unordered pair is evaluated
/// once and mirrored, so the result is exactly symmetric.
pub fn gram_symmetric(spec: &KernelSpec, a: ArrayView2<f64>) -> Result<Array2<f64>> {
    check_gram_inputs(spec, a, a)?;
    let ev = Evaluator::new(spec);
    let pa = prepare_rows(spec, a);
    let n = a.nrows();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = pa.row(i);
            let x = x.as_slice().expect("standard layout");
            (i..n)
                .map(|j| ev.eval(x, pa.row(j).as_slice().expect("standard layout")))
                .collect()
        })
        .collect();
    let mut out = Array2::zeros((n, n));
    for (i, row) in upper.iter().enumerate() {
        for (offset, &v) in row.iter().enumerate() {
            out[[i, i + offset]] = v;
            out[[i + offset, i]] = v;
        }
    }
    Ok(out)
}

/// Pairwise squared Euclidean distances of the rows of `a`, summed in band
/// order exactly as the RBF kernel does.
pub fn squared_distances(a: ArrayView2<f64>) -> Array2<f64> {
    let pa = a.as_standard_layout();
    let n = a.nrows();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = pa.row(i);
            let x = x.as_slice().expect("standard layout");
            (i..n)
                .map(|j| sq_dist(x, pa.row(j).as_slice().expect("standard layout")))
                .collect()
        })
        .collect();
    let mut out = Array2::zeros((n, n));
    for (i, row) in upper.iter().enumerate() {
        for (offset, &v) in row.iter().enumerate() {
            out[[i, i + offset]] = v;
            out[[i + offset, i]] = v;
        }
    }
    out
}

/// RBF Gram from precomputed squared distances. Bitwise equal to
/// [`gram_symmetric`] with `KernelSpec::Rbf { gamma }`.
pub fn rbf_gram_from_distances(distances: &Array2<f64>, gamma: f64) -> Result<Array2<f64>> {
    check_gamma(gamma)?;
    Ok(distances.mapv(|d| (-gamma * d).exp()))
}

/// Pairwise inner products of the rows of `a`, for linear and polynomial
/// Gram matrices across many degrees.
pub fn inner_products(a: ArrayView2<f64>) -> Array2<f64> {
    gram_symmetric(&KernelSpec::Linear, a).expect("linear kernel has no parameters")
}

/// Polynomial Gram from precomputed inner products. Bitwise equal to
/// [`gram_symmetric`] with `KernelSpec::Polynomial { degree }`.
pub fn polynomial_gram_from_inner(inner: &Array2<f64>, degree: u32) -> Result<Array2<f64>> {
    if degree < 1 {
        return Err(Error::argument("polynomial degree must be >= 1"));
    }
    Ok(inner.mapv(|v| poly(v, degree)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn rbf_examples() {
        assert_eq!(eval_rbf(&[1.0, 2.0], &[1.0, 2.0], 3.0).unwrap(), 1.0);
        // exp(-0.5 * 2)
        let v = eval_rbf(&[1.0, 0.0], &[0.0, 1.0], 0.5).unwrap();
        assert!(close(v, 0.367_879_441_171_442_33, 1e-15), "{v}");
        let mut prev = 1.0;
        for g in [0.1, 1.0, 10.0, 100.0] {
            let v = eval_rbf(&[1.0, 0.0], &[0.0, 1.0], g).unwrap();
            assert!(v < prev && v > 0.0);
            prev = v;
        }
        assert!(eval_rbf(&[1.0], &[1.0, 2.0], 1.0).is_err());
        assert!(eval_rbf(&[1.0], &[1.0], 0.0).is_err());
        assert!(eval_rbf(&[1.0], &[1.0], f64::NAN).is_err());
    }

    #[test]
    fn rrbf_examples() {
        let x = [0.3, -1.2, 2.0];
        let y = [1.1, 0.4, -0.5];
        let g = 0.7;
        let a = eval_rrbf(&x, &y, &[g; 3]).unwrap();
        let b = eval_rbf(&x, &y, g).unwrap();
        assert!(close(a, b, 1e-15));
        assert_eq!(eval_rrbf(&x, &x, &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        let v = eval_rrbf(&[1.0, 0.0], &[0.0, 0.0], &[2.0, 5.0]).unwrap();
        assert!(close(v, 0.135_335_283_236_612_7, 1e-15));
        assert!(eval_rrbf(&x, &y, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn crrbf_examples() {
        let x = [1.0, 1.0, 1.0];
        let y = [0.0, 1.0, 0.0];
        let c = BandClustering::new(vec![0, 0, 1]).unwrap();
        let v = eval_crrbf(&x, &y, &c, &[1.0, 2.0]).unwrap();
        assert!(close(v, 0.049_787_068_367_863_944, 1e-15), "{v}");
        let product = (-1.0f64).exp() * (-2.0f64).exp();
        assert!(close(v, product, 1e-15));

        let single = BandClustering::single(3);
        assert_eq!(
            eval_crrbf(&x, &y, &single, &[0.4]).unwrap(),
            eval_rbf(&x, &y, 0.4).unwrap()
        );
        let g = [0.2, 0.9, 0.5];
        assert_eq!(
            eval_crrbf(&x, &y, &BandClustering::singletons(3), &g).unwrap(),
            eval_rrbf(&x, &y, &g).unwrap()
        );
        assert!(eval_crrbf(&x, &y, &c, &[1.0]).is_err());
        assert!(eval_crrbf(&[1.0, 2.0], &[1.0, 2.0], &c, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn polynomial_examples() {
        assert_eq!(eval_polynomial(&[1.0, 2.0], &[3.0, 4.0], 2).unwrap(), 144.0);
        assert_eq!(eval_polynomial(&[1.0, 2.0], &[3.0, 4.0], 1).unwrap(), 12.0);
        assert_eq!(eval_polynomial(&[0.0, 0.0], &[3.0, -4.0], 3).unwrap(), 1.0);
        assert_eq!(eval_linear(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        assert!(eval_polynomial(&[1.0], &[1.0], 0).is_err());
    }

    #[test]
    fn sampler_is_deterministic_and_in_range() {
        let s = GammaSampler::new(0.0, 1.0, 17).unwrap();
        assert_eq!(s.draw(50).unwrap(), s.draw(50).unwrap());
        let draws = s.draw(10_000).unwrap();
        assert!(draws.iter().all(|&g| g > 0.0 && g <= 1.0));
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((mean - 0.5).abs() < 0.02, "{mean}");
        assert!(GammaSampler::new(1.0, 1.0, 0).is_err());
        assert!(GammaSampler::new(-1.0, 1.0, 0).is_err());
    }

    #[test]
    fn sample_specs() {
        let s = GammaSampler::default().with_seed(3);
        match sample_rrbf(1, &s).unwrap() {
            KernelSpec::Rrbf { gammas } => assert_eq!(gammas.len(), 1),
            other => panic!("{other:?}"),
        }
        let c = BandClustering::new(vec![0, 1, 2, 3, 4, 0]).unwrap();
        let a = sample_crrbf(&c, &s).unwrap();
        let b = sample_crrbf(&c, &s.with_seed(4)).unwrap();
        match (&a, &b) {
            (KernelSpec::Crrbf { gammas: ga, .. }, KernelSpec::Crrbf { gammas: gb, .. }) => {
                assert_eq!(ga.len(), 5);
                assert_ne!(ga, gb);
            }
            _ => unreachable!(),
        }
        let one = sample_crrbf(&BandClustering::single(4), &s).unwrap();
        let x = [0.1, 0.2, 0.3, 0.4];
        let y = [0.0, -0.2, 0.5, 1.0];
        if let KernelSpec::Crrbf { gammas, .. } = &one {
            assert_eq!(
                eval(&one, &x, &y).unwrap(),
                eval_rbf(&x, &y, gammas[0]).unwrap()
            );
        }
    }

    #[test]
    fn gram_symmetric_and_unit_diagonal() {
        let a = array![
            [0.1, 0.2, 0.3],
            [1.0, -1.0, 0.5],
            [0.0, 0.0, 2.0],
            [0.3, 0.3, 0.3]
        ];
        let c = BandClustering::new(vec![1, 0, 1]).unwrap();
        for spec in [
            KernelSpec::Rbf { gamma: 0.8 },
            KernelSpec::Rrbf {
                gammas: vec![0.1, 0.5, 0.9],
            },
            KernelSpec::Crrbf {
                clustering: c.clone(),
                gammas: vec![0.3, 0.6],
            },
            KernelSpec::Polynomial { degree: 3 },
            KernelSpec::Linear,
        ] {
            let g = gram(&spec, a.view(), a.view()).unwrap();
            for i in 0..4 {
                if spec.is_rbf_family() {
                    assert_eq!(g[[i, i]], 1.0);
                }
                for j in 0..4 {
                    assert_eq!(g[[i, j]].to_bits(), g[[j, i]].to_bits());
                    let direct = eval(
                        &spec,
                        a.row(i).as_slice().unwrap(),
                        a.row(j).as_slice().unwrap(),
                    )
                    .unwrap();
                    assert!(close(g[[i, j]], direct, 1e-14));
                }
            }
            let b = a.slice(ndarray::s![1..3, ..]).to_owned();
            let cross = gram(&spec, a.view(), b.view()).unwrap();
            assert_eq!(cross.dim(), (4, 2));
            assert!(close(cross[[2, 1]], g[[2, 2]], 1e-14));
        }
    }

    #[test]
    fn gram_dimension_mismatch() {
        let a = array![[0.1, 0.2], [1.0, -1.0]];
        let b = array![[0.1, 0.2, 0.3]];
        assert!(gram(&KernelSpec::Linear, a.view(), b.view()).is_err());
        let spec = KernelSpec::Rrbf {
            gammas: vec![1.0, 2.0, 3.0],
        };
        assert!(gram(&spec, a.view(), a.view()).is_err());
    }

    #[test]
    fn precomputed_routes_match_direct_gram() {
        let a = array![[0.1, 0.2, 0.3], [1.0, -1.0, 0.5], [0.0, 0.0, 2.0]];
        let d = squared_distances(a.view());
        let via_d = rbf_gram_from_distances(&d, 1.7).unwrap();
        let direct = gram_symmetric(&KernelSpec::Rbf { gamma: 1.7 }, a.view()).unwrap();
        assert_eq!(via_d, direct);
        let inner = inner_products(a.view());
        let via_inner = polynomial_gram_from_inner(&inner, 4).unwrap();
        let direct = gram_symmetric(&KernelSpec::Polynomial { degree: 4 }, a.view()).unwrap();
        assert_eq!(via_inner, direct);
    }

    #[test]
    fn family_parsing() {
        assert_eq!("RBF".parse::<KernelFamily>().unwrap(), KernelFamily::Rbf);
        let msg = "sigmoid".parse::<KernelFamily>().unwrap_err().to_string();
        assert!(
            msg.contains("linear, polynomial, rbf, rrbf, crrbf"),
            "{msg}"
        );
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = KernelSpec::Crrbf {
            clustering: BandClustering::new(vec![0, 1, 0]).unwrap(),
            gammas: vec![0.123_456_789_012_345_67, 0.9],
        };
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"kind\":\"crrbf\""));
        assert_eq!(serde_json::from_str::<KernelSpec>(&text).unwrap(), spec);
    }
}
