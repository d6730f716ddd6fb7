//! Demonstrates that the two formulations of the preconditioned problem,
//! the full-size residual-projector design and the compact kernel-basis
//! design, produce the same coefficients at any regularization level.

use ndarray::Array1;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use robust_lasso::plasso::coord_descent::equivalence_check;
use robust_lasso::plasso::precondition::precondition;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let normal = Normal::new(0.0, 1.0)?;
    let mut worst = 0.0f64;
    for trial in 0..10 {
        let n = rng.gen_range(12..40);
        let p = rng.gen_range(1..4);
        let phi = ndarray::Array2::from_shape_fn((n, p), |_| normal.sample(&mut rng));
        let y = Array1::from_shape_fn(n, |_| normal.sample(&mut rng));
        let pre = precondition(&phi)?;
        let lambda = 0.3 * (trial as f64 + 1.0) / 10.0;
        let out = equivalence_check(&pre, y.view(), lambda)?;
        worst = worst.max(out.max_diff);
    }
    println!("worst coefficient difference over 10 random problems: {worst:.2e}");
    assert!(worst <= 1e-8);
    Ok(())
}
