//! Builds an experiment config in code, runs it and writes the same report
//! files as `crrbf experiment`.
//!
//! ```bash
//! cargo run --release -p crrbf --example experiment_runner -- [config.json]
//! ```
//!
//! Without an argument a small cluster sweep on synthetic data is run.

use std::sync::atomic::AtomicBool;

use crrbf::experiment::{render_report, run_experiment, write_outputs, ExperimentConfig};

const DEFAULT: &str = r#"{
    "scenario": "cluster_sweep",
    "data": {
        "synthetic": {
            "class_count": 3, "samples_per_class": 40, "band_count": 30,
            "spectral_smoothness": 0.9, "class_separation": 0.03,
            "noise_std": 0.045, "seed": 1
        }
    },
    "trade_offs": [1, 8, 64, 512],
    "plan": {"cluster_counts": [3, 5, 7], "repeats": 5},
    "seed": 2024
}"#;

fn main() {
    let config = match std::env::args().nth(1) {
        Some(path) => ExperimentConfig::load(path),
        None => ExperimentConfig::from_json(DEFAULT),
    };
    let mut config = config.unwrap_or_else(|e| {
        eprintln!("{e}");
        std::process::exit(2);
    });
    config.output_dir = std::env::temp_dir().join("crrbf_experiment");

    let report = match run_experiment(&config, &AtomicBool::new(false)) {
        Ok(r) => r,
        Err(f) => {
            eprintln!("{f}");
            std::process::exit(f.exit_code());
        }
    };
    print!("{}", render_report(&report));
    write_outputs(&report, &config.output_dir).expect("output directory is writable");
    println!("\nfiles in {}", config.output_dir.display());
}
