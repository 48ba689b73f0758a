//! Accuracy of a fixed CRRBF configuration as the training set shrinks.
//!
//! ```bash
//! cargo run --release -p crrbf --example fraction_sweep
//! ```

use crrbf::dataset::{generate_synthetic, stratified_split, SyntheticSpec};
use crrbf::model_selection::{training_fraction_sweep, TrialPlan};
use crrbf::svm::TrainConfig;

fn main() -> crrbf::Result<()> {
    let ds = generate_synthetic(&SyntheticSpec {
        class_count: 5,
        samples_per_class: 80,
        band_count: 60,
        spectral_smoothness: 0.9,
        class_separation: 0.03,
        noise_std: 0.045,
        seed: 8,
    })?;
    let (train, test) = stratified_split(&ds, 0.5, 4)?;

    let fractions = [0.1, 0.2, 0.3, 0.4, 0.5, 0.75, 1.0];
    let sweep = training_fraction_sweep(
        &train,
        &test,
        &fractions,
        5,
        128.0,
        &TrialPlan {
            base_seed: 3,
            ..TrialPlan::default()
        },
        &TrainConfig::new(1.0),
    )?;
    println!(
        "CRRBF k={} C={}, {} repeats",
        sweep.cluster_count, sweep.trade_off, sweep.repeats
    );
    for row in &sweep.rows {
        println!(
            "  {:>5.0}%  {:>4} samples  OA {:6.2}% ± {:.2}  kappa {:.3}",
            100.0 * row.fraction,
            row.train_size,
            100.0 * row.accuracy.mean,
            100.0 * row.accuracy.std,
            row.mean_kappa
        );
    }
    Ok(())
}
