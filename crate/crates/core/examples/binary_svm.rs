//! Trains a binary SVM with SMO on the XOR problem from a precomputed RBF
//! Gram matrix and prints the dual solution.
//!
//! ```bash
//! cargo run -p crrbf --example binary_svm
//! ```

use crrbf::kernels::{gram, gram_symmetric, KernelSpec};
use crrbf::svm::{decision_values, train_binary, TrainConfig};
use ndarray::{array, Axis};

fn main() -> crrbf::Result<()> {
    let x = array![[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]];
    let y = [-1.0, -1.0, 1.0, 1.0];
    let spec = KernelSpec::Rbf { gamma: 1.0 };

    let k = gram_symmetric(&spec, x.view())?;
    let model = train_binary(k.view(), &y, &TrainConfig::new(100.0))?;
    println!(
        "converged {} after {} iterations, KKT violation {:.2e}",
        model.converged, model.iterations, model.kkt_violation
    );
    println!("support vectors {:?}", model.support_indices);
    println!("alphas {:?}", model.alphas);
    println!(
        "bias {:.6}, dual objective {:.6}",
        model.bias, model.dual_objective
    );

    let probes = array![[0.1, 0.1], [0.9, 0.1], [0.5, 0.5]];
    let sv = x.select(Axis(0), &model.support_indices);
    let cross = gram(&spec, probes.view(), sv.view())?;
    for (p, f) in probes
        .rows()
        .into_iter()
        .zip(decision_values(&model, cross.view())?)
    {
        println!("f({p}) = {f:+.4}");
    }
    Ok(())
}
