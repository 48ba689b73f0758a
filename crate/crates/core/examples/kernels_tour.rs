//! Evaluates every kernel family on a pair of spectra, checks the CRRBF
//! reductions to RBF and RRBF, and round-trips a sampled kernel through JSON.
//!
//! ```bash
//! cargo run -p crrbf --example kernels_tour
//! ```

use crrbf::band_clustering::BandClustering;
use crrbf::kernels::{self, sample_crrbf, GammaSampler, KernelSpec};

fn main() -> crrbf::Result<()> {
    let x = [0.12, 0.15, 0.19, 0.31, 0.33, 0.30];
    let y = [0.10, 0.16, 0.22, 0.27, 0.35, 0.36];

    let clustering = BandClustering::new(vec![0, 0, 0, 1, 1, 2])?;
    let specs = [
        KernelSpec::Linear,
        KernelSpec::Polynomial { degree: 3 },
        KernelSpec::Rbf { gamma: 2.0 },
        KernelSpec::Rrbf {
            gammas: vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
        },
        KernelSpec::Crrbf {
            clustering: clustering.clone(),
            gammas: vec![0.5, 2.0, 8.0],
        },
    ];
    for spec in &specs {
        println!(
            "{:<40} K(x, y) = {:.6}",
            spec.describe(),
            kernels::eval(spec, &x, &y)?
        );
    }

    // One cluster is plain RBF; one band per cluster is RRBF.
    let rbf = kernels::eval_rbf(&x, &y, 2.0)?;
    let one = kernels::eval_crrbf(&x, &y, &BandClustering::single(6), &[2.0])?;
    println!("\nCRRBF with k=1 vs RBF: {one} == {rbf}");
    let gammas = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];
    let rrbf = kernels::eval_rrbf(&x, &y, &gammas)?;
    let singles = kernels::eval_crrbf(&x, &y, &BandClustering::singletons(6), &gammas)?;
    println!("CRRBF with singletons vs RRBF: {singles} == {rrbf}");

    let sampled = sample_crrbf(&clustering, &GammaSampler::default().with_seed(42))?;
    let json = serde_json::to_string(&sampled)?;
    println!("\nsampled kernel: {json}");
    let back: KernelSpec = serde_json::from_str(&json)?;
    assert_eq!(back, sampled);
    Ok(())
}
