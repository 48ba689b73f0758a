//! Dataset file round trip: write a CSV, read it back, standardize with
//! training statistics and take a stratified subsample.
//!
//! Each line of a dataset file is one sample: band values followed by an
//! integer class label.
//!
//! ```bash
//! cargo run -p crrbf --example csv_dataset
//! ```

use crrbf::dataset::{
    generate_synthetic, load_dataset, stratified_split, stratified_subsample, write_dataset,
    SyntheticSpec,
};
use crrbf::Standardizer;

fn main() -> crrbf::Result<()> {
    let ds = generate_synthetic(&SyntheticSpec {
        class_count: 3,
        samples_per_class: 30,
        band_count: 8,
        spectral_smoothness: 0.8,
        class_separation: 2.0,
        noise_std: 0.5,
        seed: 1,
    })?;
    let path = std::env::temp_dir().join("crrbf_dataset.csv");
    write_dataset(&ds, &path)?;
    let loaded = load_dataset(&path)?;
    println!(
        "{}: {} samples, {} bands, classes {:?}",
        path.display(),
        loaded.sample_count(),
        loaded.band_count(),
        loaded.class_ids()
    );

    let (train, test) = stratified_split(&loaded, 0.5, 9)?;
    let scaler = Standardizer::fit(train.features());
    let (train, test) = (scaler.apply(&train)?, scaler.apply(&test)?);
    println!("band means {:.3?}", scaler.means);
    println!("band scales {:.3?}", scaler.scales);
    println!(
        "test band 0 mean after scaling: {:.3}",
        test.features().column(0).mean().unwrap_or(0.0)
    );

    let small = stratified_subsample(&train, 0.2, 4)?;
    let per_class: Vec<usize> = small.class_indices().iter().map(Vec::len).collect();
    println!(
        "20% subsample: {} samples, per class {per_class:?}",
        small.sample_count()
    );

    std::fs::write(&path, "0.1,0.2,1\n0.3,0.4\n").unwrap();
    match load_dataset(&path) {
        Err(e) => println!("malformed file: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
