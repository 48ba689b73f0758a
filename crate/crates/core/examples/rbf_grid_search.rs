//! Stratified 5-fold grid search over the RBF bandwidth and SVM trade-off,
//! then a held-out score at the selected point.
//!
//! ```bash
//! cargo run --release -p crrbf --example rbf_grid_search
//! ```

use crrbf::dataset::{generate_synthetic, stratified_split, SyntheticSpec};
use crrbf::kernels::KernelFamily;
use crrbf::model_selection::{grid_search, holdout_score, GridSpec};
use crrbf::svm::TrainConfig;

fn main() -> crrbf::Result<()> {
    let ds = generate_synthetic(&SyntheticSpec {
        class_count: 5,
        samples_per_class: 60,
        band_count: 60,
        spectral_smoothness: 0.9,
        class_separation: 0.03,
        noise_std: 0.045,
        seed: 21,
    })?;
    let (train, test) = stratified_split(&ds, 0.5, 2)?;

    let grid = GridSpec {
        seed: 5,
        ..GridSpec::default()
    };
    let base = TrainConfig::new(1.0);
    for family in [KernelFamily::Rbf, KernelFamily::Polynomial] {
        let result = grid_search(&train, family, &grid, &base)?;
        let mut rows = result.table.clone();
        rows.sort_by(|a, b| b.score.mean_accuracy.total_cmp(&a.score.mean_accuracy));
        println!(
            "{family}: {} grid points, top 3 by CV accuracy",
            result.table.len()
        );
        for r in rows.iter().take(3) {
            println!(
                "  {:<24} C={:<6} CV OA {:.2}% ± {:.2}",
                r.kernel.describe(),
                r.trade_off,
                100.0 * r.score.mean_accuracy,
                100.0 * r.score.std_accuracy
            );
        }
        let best = &result.best;
        let (acc, kappa, _) = holdout_score(
            &train,
            &test,
            &best.kernel,
            &base.with_trade_off(best.trade_off),
        )?;
        println!(
            "  selected {} C={}: test OA {:.2}%, kappa {:.3}\n",
            best.kernel.describe(),
            best.trade_off,
            100.0 * acc,
            kappa
        );
    }
    Ok(())
}
