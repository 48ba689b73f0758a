//! Confusion matrices, accuracy statistics and stage timing.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `C × C` counts; entry `(i, j)` is true class `i` predicted as `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    class_count: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn zeros(class_count: usize) -> Self {
        Self {
            class_count,
            counts: vec![0; class_count * class_count],
        }
    }

    /// Builds from row-major nested counts.
    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let c = rows.len();
        if rows.iter().any(|r| r.len() != c) {
            return Err(Error::argument("confusion matrix must be square"));
        }
        Ok(Self {
            class_count: c,
            counts: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.class_count + predicted]
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts
            .chunks(self.class_count.max(1))
            .map(<[u64]>::to_vec)
            .take(self.class_count)
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.class_count).map(|i| self.get(i, i)).sum()
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        (0..self.class_count).map(|j| self.get(i, j)).sum()
    }

    pub fn col_sum(&self, j: usize) -> u64 {
        (0..self.class_count).map(|i| self.get(i, j)).sum()
    }

    /// Element-wise sum, for pooling folds.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.class_count != self.class_count {
            return Err(Error::argument(
                "cannot merge confusion matrices of different sizes",
            ));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }
}

pub fn confusion(
    true_labels: &[usize],
    predicted_labels: &[usize],
    class_count: usize,
) -> Result<ConfusionMatrix> {
    if true_labels.len() != predicted_labels.len() {
        return Err(Error::argument(format!(
            "{} true labels but {} predictions",
            true_labels.len(),
            predicted_labels.len()
        )));
    }
    let mut cm = ConfusionMatrix::zeros(class_count);
    for (&t, &p) in true_labels.iter().zip(predicted_labels) {
        if t >= class_count || p >= class_count {
            return Err(Error::argument(format!(
                "label pair ({t}, {p}) outside 0..{class_count}"
            )));
        }
        cm.counts[t * class_count + p] += 1;
    }
    Ok(cm)
}

fn non_empty(cm: &ConfusionMatrix) -> Result<f64> {
    match cm.total() {
        0 => Err(Error::argument("confusion matrix is empty")),
        n => Ok(n as f64),
    }
}

/// `trace / total`, in `[0, 1]`.
pub fn overall_accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    Ok(cm.trace() as f64 / non_empty(cm)?)
}

/// Cohen's kappa `(p_o − p_e) / (1 − p_e)`.
///
/// When chance agreement is total (`p_e = 1`, every count in one cell) the
/// result is 1.
pub fn cohen_kappa(cm: &ConfusionMatrix) -> Result<f64> {
    let n = non_empty(cm)?;
    let p_o = cm.trace() as f64 / n;
    let p_e = (0..cm.class_count)
        .map(|c| cm.row_sum(c) as f64 * cm.col_sum(c) as f64)
        .sum::<f64>()
        / (n * n);
    if p_e >= 1.0 {
        return Ok(1.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// Diagonal over row sum; `None` for classes with no samples.
pub fn per_class_accuracy(cm: &ConfusionMatrix) -> Vec<Option<f64>> {
    (0..cm.class_count)
        .map(|c| match cm.row_sum(c) {
            0 => None,
            n => Some(cm.get(c, c) as f64 / n as f64),
        })
        .collect()
}

/// Mean and spread of repeated trial values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (`n − 1` denominator); 0 when `count == 1`.
    pub std: f64,
    /// Population standard deviation (`n` denominator).
    pub population_std: f64,
    /// Set when `count == 1` and `std` is 0 by convention.
    pub degenerate: bool,
}

pub fn trial_stats(values: &[f64]) -> Result<TrialStats> {
    if values.is_empty() {
        return Err(Error::argument("trial statistics need at least one value"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    let degenerate = values.len() == 1;
    Ok(TrialStats {
        count: values.len(),
        mean,
        std: if degenerate {
            0.0
        } else {
            (ss / (n - 1.0)).sqrt()
        },
        population_std: (ss / n).sqrt(),
        degenerate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingEntry {
    pub stage: String,
    pub seconds: f64,
}

/// Named wall-clock durations collected over a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub entries: Vec<TimingEntry>,
}

impl TimingRecord {
    pub fn push(&mut self, entry: TimingEntry) {
        self.entries.push(entry);
    }

    pub fn time<R>(&mut self, stage: impl Into<String>, f: impl FnOnce() -> R) -> R {
        let (r, e) = stopwatch(stage, f);
        self.push(e);
        r
    }

    pub fn total(&self, stage: &str) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.stage == stage)
            .map(|e| e.seconds)
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Runs `f` and measures it on the monotonic clock. Seconds are rounded to
/// millisecond resolution.
pub fn stopwatch<R>(stage: impl Into<String>, f: impl FnOnce() -> R) -> (R, TimingEntry) {
    let start = Instant::now();
    let r = f();
    let elapsed = start.elapsed();
    let entry = TimingEntry {
        stage: stage.into(),
        seconds: elapsed.as_millis() as f64 / 1000.0,
    };
    (r, entry)
}

/// Unrounded elapsed seconds, for comparisons below millisecond scale.
pub fn measure<R>(f: impl FnOnce() -> R) -> (R, f64) {
    let start = Instant::now();
    let r = f();
    (r, start.elapsed().as_secs_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cm(rows: &[&[u64]]) -> ConfusionMatrix {
        ConfusionMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn confusion_examples() {
        let m = confusion(&[0, 1, 2, 1], &[0, 1, 2, 1], 3).unwrap();
        assert_eq!(m.rows(), vec![vec![1, 0, 0], vec![0, 2, 0], vec![0, 0, 1]]);
        let empty = confusion(&[], &[], 2).unwrap();
        assert_eq!(empty.total(), 0);
        let m = confusion(&[0, 0, 1, 1], &[0, 1, 1, 1], 2).unwrap();
        assert_eq!(m.rows(), vec![vec![1, 1], vec![0, 2]]);
        assert!(confusion(&[0], &[0, 1], 2).is_err());
        assert!(confusion(&[0, 2], &[0, 1], 2).is_err());
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(overall_accuracy(&cm(&[&[50, 0], &[0, 50]])).unwrap(), 1.0);
        assert_eq!(overall_accuracy(&cm(&[&[1, 1], &[0, 2]])).unwrap(), 0.75);
        assert_eq!(overall_accuracy(&cm(&[&[0, 3], &[4, 0]])).unwrap(), 0.0);
        assert!(overall_accuracy(&ConfusionMatrix::zeros(2)).is_err());
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(cohen_kappa(&cm(&[&[5, 0], &[0, 7]])).unwrap(), 1.0);
        assert_eq!(cohen_kappa(&cm(&[&[1, 1], &[1, 1]])).unwrap(), 0.0);
        let k = cohen_kappa(&cm(&[&[45, 5], &[15, 35]])).unwrap();
        assert!((k - 0.6).abs() < 1e-12, "{k}");
        assert_eq!(cohen_kappa(&cm(&[&[9, 0], &[0, 0]])).unwrap(), 1.0);
        assert!(cohen_kappa(&ConfusionMatrix::zeros(3)).is_err());
    }

    #[test]
    fn kappa_zero_for_proportional_rows() {
        // Rows proportional to the column margins (2:1).
        let k = cohen_kappa(&cm(&[&[4, 2], &[8, 4]])).unwrap();
        assert!(k.abs() < 1e-12);
    }

    #[test]
    fn per_class_marks_empty_rows() {
        let acc = per_class_accuracy(&cm(&[&[3, 1], &[0, 0]]));
        assert_eq!(acc, vec![Some(0.75), None]);
    }

    #[test]
    fn trial_stats_examples() {
        let s = trial_stats(&[4.2]).unwrap();
        assert!(s.degenerate && s.std == 0.0 && s.mean == 4.2);
        assert!(trial_stats(&[]).is_err());

        // Table 2 rows; the reported spreads (0.47, 0.38, 0.13) are population stds.
        let rows: [(&[f64], f64); 3] = [
            (
                &[81.44, 81.94, 82.44, 81.03, 81.69, 81.41, 81.73, 82.46],
                0.47,
            ),
            (
                &[78.63, 78.64, 79.39, 78.87, 78.51, 78.64, 77.96, 78.45],
                0.38,
            ),
            (
                &[95.20, 95.14, 95.05, 95.07, 95.06, 94.72, 95.09, 95.09],
                0.13,
            ),
        ];
        for (values, reported) in rows {
            let s = trial_stats(values).unwrap();
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            assert!((s.std - (ss / (n - 1.0)).sqrt()).abs() < 1e-12);
            assert!((s.population_std - (ss / n).sqrt()).abs() < 1e-12);
            assert!(
                (s.population_std - reported).abs() < 0.005,
                "{}",
                s.population_std
            );
            assert!(s.std > s.population_std);
        }
        let ksc = trial_stats(rows[2].0).unwrap();
        assert!((ksc.std - 0.143).abs() < 0.001, "{}", ksc.std);
    }

    #[test]
    fn stopwatch_noop_is_fast() {
        let ((), e) = stopwatch("noop", || ());
        assert!(e.seconds >= 0.0 && e.seconds < 0.01);
        assert_eq!(e.stage, "noop");
        let mut rec = TimingRecord::default();
        let v = rec.time("outer", rec_inner);
        assert_eq!(v, 3);
        assert!(rec.entries.iter().all(|e| e.seconds >= 0.0));
    }

    fn rec_inner() -> i32 {
        let (v, _) = stopwatch("inner", || 3);
        v
    }

    proptest! {
        #[test]
        fn oa_is_frequency_weighted_per_class(
            truth in proptest::collection::vec(0usize..4, 1..60),
            noise in proptest::collection::vec(0usize..4, 60),
        ) {
            let pred: Vec<usize> = truth.iter().zip(&noise).map(|(t, n)| if n % 2 == 0 { *t } else { *n }).collect();
            let m = confusion(&truth, &pred, 4).unwrap();
            let oa = overall_accuracy(&m).unwrap();
            let total = m.total() as f64;
            let weighted: f64 = per_class_accuracy(&m)
                .iter()
                .enumerate()
                .filter_map(|(c, a)| a.map(|a| a * m.row_sum(c) as f64 / total))
                .sum();
            prop_assert!((oa - weighted).abs() < 1e-12);
        }

        #[test]
        fn relabeling_permutes_confusion(
            truth in proptest::collection::vec(0usize..3, 1..40),
            pred in proptest::collection::vec(0usize..3, 40),
        ) {
            let pred = &pred[..truth.len()];
            let perm = [2usize, 0, 1];
            let a = confusion(&truth, pred, 3).unwrap();
            let t2: Vec<usize> = truth.iter().map(|&t| perm[t]).collect();
            let p2: Vec<usize> = pred.iter().map(|&p| perm[p]).collect();
            let b = confusion(&t2, &p2, 3).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert_eq!(a.get(i, j), b.get(perm[i], perm[j]));
                }
            }
            prop_assert!((cohen_kappa(&a).unwrap() - cohen_kappa(&b).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn kappa_is_one_iff_diagonal(counts in proptest::collection::vec(0u64..20, 9)) {
            let rows: Vec<Vec<u64>> = counts.chunks(3).map(|c| c.to_vec()).collect();
            let m = ConfusionMatrix::from_rows(&rows).unwrap();
            prop_assume!(m.total() > 0);
            let nonempty = (0..3).filter(|&c| m.row_sum(c) > 0).count();
            prop_assume!(nonempty >= 2);
            let diagonal = m.trace() == m.total();
            let k = cohen_kappa(&m).unwrap();
            prop_assert_eq!(diagonal, (k - 1.0).abs() < 1e-12);
        }
    }
}
