//! One-vs-one multiclass SVM with a CRRBF kernel: train, predict, score and
//! persist the model.
//!
//! ```bash
//! cargo run -p crrbf --example multiclass_svm
//! ```

use crrbf::dataset::{generate_synthetic, stratified_split, SyntheticSpec};
use crrbf::kernels::{sample_crrbf, GammaSampler};
use crrbf::metrics::{cohen_kappa, confusion, overall_accuracy, per_class_accuracy};
use crrbf::svm::{train_ovo, MulticlassSvmModel, TrainConfig};

fn main() -> crrbf::Result<()> {
    let ds = generate_synthetic(&SyntheticSpec {
        class_count: 4,
        samples_per_class: 60,
        band_count: 40,
        spectral_smoothness: 0.9,
        class_separation: 0.03,
        noise_std: 0.04,
        seed: 11,
    })?;
    let (train, test) = stratified_split(&ds, 0.5, 1)?;

    let clustering = crrbf::cluster_bands(&train, 5, 2)?;
    let kernel = sample_crrbf(&clustering, &GammaSampler::default().with_seed(3))?;
    let model = train_ovo(&train, &kernel, &TrainConfig::new(64.0))?;
    println!(
        "{} pairwise models, {} retained support vectors, all converged: {}",
        model.ensemble.pairs.len(),
        model.support_rows.len(),
        model.all_converged()
    );

    let predicted = model.predict(test.features().view())?;
    let cm = confusion(test.labels(), &predicted, test.class_count())?;
    println!("confusion matrix:");
    for row in cm.rows() {
        println!("  {row:?}");
    }
    println!(
        "OA {:.2}%  kappa {:.3}",
        100.0 * overall_accuracy(&cm)?,
        cohen_kappa(&cm)?
    );
    for (c, acc) in per_class_accuracy(&cm).iter().enumerate() {
        match acc {
            Some(a) => println!("  class {}: {:.2}%", model.class_ids[c], 100.0 * a),
            None => println!("  class {}: no test samples", model.class_ids[c]),
        }
    }

    let path = std::env::temp_dir().join("crrbf_model.json");
    model.save(&path)?;
    let restored = MulticlassSvmModel::load(&path)?;
    assert_eq!(restored.predict(test.features().view())?, predicted);
    println!("model saved to {} and reloaded", path.display());
    Ok(())
}
