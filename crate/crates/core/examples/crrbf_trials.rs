//! Ten random CRRBF kernels per cluster count, each scored at every
//! trade-off value: the cluster-count × C table and its summary.
//!
//! ```bash
//! cargo run --release -p crrbf --example crrbf_trials
//! ```

use crrbf::dataset::{generate_synthetic, stratified_split, SyntheticSpec};
use crrbf::model_selection::{default_trade_offs, run_crrbf_trials, TrialPlan};
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

    let plan = TrialPlan {
        base_seed: 17,
        ..TrialPlan::default()
    };
    let table = run_crrbf_trials(
        &train,
        &test,
        &plan,
        &default_trade_offs(),
        &TrainConfig::new(1.0),
    )?;

    print!("{:>3}", "k");
    for c in &table.trade_offs {
        print!("{:>8}", format!("C={c}"));
    }
    println!();
    for row in &table.rows {
        print!("{:>3}", row.cluster_count);
        for cell in &row.cells {
            print!("{:>8.2}", 100.0 * cell.accuracy.mean);
        }
        println!();
    }

    println!("\nmaximum over C per cluster count:");
    for b in table.max_over_trade_offs() {
        println!(
            "  k={:<2} C={:<5} OA {:.2}%  kappa {:.3}",
            b.cluster_count,
            b.trade_off,
            100.0 * b.mean_accuracy,
            b.mean_kappa
        );
    }
    let spread = table.cluster_count_spread()?;
    println!("spread across k: sample std {:.2} pts", 100.0 * spread.std);
    let best = table.best();
    println!(
        "best cell: k={} C={} OA {:.2}%",
        best.cluster_count,
        best.trade_off,
        100.0 * best.mean_accuracy
    );

    // Any trial can be rebuilt from its seed.
    let t = &table.rows[0].trials[0];
    println!(
        "trial (k={}, r={}) seed {} kernel {}",
        t.cluster_count,
        t.repeat,
        t.seed,
        t.kernel.describe()
    );
    Ok(())
}
