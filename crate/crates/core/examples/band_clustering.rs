//! Groups the bands of a synthetic spectral dataset with K-Means and writes
//! the clustering in the `band_index,cluster_id` format used by the CLI.
//!
//! ```bash
//! cargo run -p crrbf --example band_clustering -- 5
//! ```

use crrbf::band_clustering::{band_points, cluster_sizes, kmeans, KMeansConfig};
use crrbf::dataset::{generate_synthetic, SyntheticSpec};

fn main() -> crrbf::Result<()> {
    let k: usize = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(4);
    let ds = generate_synthetic(&SyntheticSpec {
        class_count: 4,
        samples_per_class: 40,
        band_count: 48,
        spectral_smoothness: 0.95,
        class_separation: 1.0,
        noise_std: 0.2,
        seed: 3,
    })?;

    let points = band_points(&ds);
    let result = kmeans(
        &points,
        &KMeansConfig {
            restarts: 3,
            ..KMeansConfig::new(k, 7)
        },
    )?;
    println!(
        "k={k}: {} iterations, converged {}, inertia {:.3}",
        result.iterations, result.converged, result.inertia
    );

    let clustering = crrbf::cluster_bands(&ds, k, 7)?;
    println!("cluster sizes: {}", cluster_sizes(&clustering));
    for (id, members) in clustering.members().iter().enumerate() {
        println!("  cluster {id}: bands {members:?}");
    }

    let path = std::env::temp_dir().join("crrbf_bands.txt");
    clustering.write(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}
