//! CRRBF against CV-tuned RBF and polynomial kernels on the same split, with
//! the time each one takes to reach a model.
//!
//! ```bash
//! cargo run --release -p crrbf --example kernel_comparison
//! ```

use crrbf::dataset::{generate_synthetic, stratified_split, SyntheticSpec};
use crrbf::kernels::KernelFamily;
use crrbf::metrics::measure;
use crrbf::model_selection::{
    default_trade_offs, grid_search, holdout_score, run_crrbf_trials, run_rrbf_trials, GridSpec,
    TrialPlan,
};
use crrbf::svm::TrainConfig;

fn main() -> crrbf::Result<()> {
    let ds = generate_synthetic(&SyntheticSpec {
        class_count: 5,
        samples_per_class: 100,
        band_count: 60,
        spectral_smoothness: 0.9,
        class_separation: 0.03,
        noise_std: 0.045,
        seed: 200,
    })?;
    let (train, test) = stratified_split(&ds, 0.5, 20)?;
    let base = TrainConfig::new(1.0);

    for family in [KernelFamily::Rbf, KernelFamily::Polynomial] {
        let (result, secs) = measure(|| grid_search(&train, family, &GridSpec::default(), &base));
        let best = result?.best;
        let (acc, kappa, _) = holdout_score(
            &train,
            &test,
            &best.kernel,
            &base.with_trade_off(best.trade_off),
        )?;
        println!(
            "{:<10} {:<22} C={:<5} OA {:.2}%  kappa {:.3}  search {:.2}s",
            family.name(),
            best.kernel.describe(),
            best.trade_off,
            100.0 * acc,
            kappa,
            secs
        );
    }

    let plan = TrialPlan {
        base_seed: 40,
        ..TrialPlan::default()
    };
    let (table, secs) =
        measure(|| run_crrbf_trials(&train, &test, &plan, &default_trade_offs(), &base));
    let best = table?.best();
    println!(
        "{:<10} k={:<20} C={:<5} OA {:.2}%  kappa {:.3}  {} trials {:.2}s",
        "crrbf",
        best.cluster_count,
        best.trade_off,
        100.0 * best.mean_accuracy,
        best.mean_kappa,
        plan.cluster_counts.len() * plan.repeats,
        secs
    );
    let (table, secs) =
        measure(|| run_rrbf_trials(&train, &test, &plan, &default_trade_offs(), &base));
    let best = table?.best();
    println!(
        "{:<10} {:<22} C={:<5} OA {:.2}%  kappa {:.3}  {} trials {:.2}s",
        "rrbf",
        format!("bands={}", best.cluster_count),
        best.trade_off,
        100.0 * best.mean_accuracy,
        best.mean_kappa,
        plan.repeats,
        secs
    );
    Ok(())
}
