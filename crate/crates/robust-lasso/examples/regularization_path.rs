//! Traces the full regularization path of the preconditioned problem and
//! certifies its stationarity conditions at every breakpoint.

use robust_lasso::dataset::{generate_synthetic, SyntheticConfig};
use robust_lasso::plasso::path::{lasso_path, max_kkt_violation};
use robust_lasso::plasso::precondition::precondition;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ds = generate_synthetic(&SyntheticConfig::paper_fig1(7))?;
    let pre = precondition(&ds.features)?;
    let path = lasso_path(&pre, ds.labels.view())?;

    println!(
        "path: {} breakpoints from lambda_max {:.4e} down to {:.4e}",
        path.breakpoints.len(),
        path.lambda_max,
        path.lambda_min()
    );
    println!(
        "worst stationarity violation across the path: {:.2e}",
        max_kkt_violation(&pre, ds.labels.view(), &path)
    );

    // The first activations should be planted outliers (instances 300+).
    let mask = ds.outlier_mask.as_ref().unwrap();
    let mut seen = Vec::new();
    for bp in &path.breakpoints {
        for &j in &bp.active {
            if !seen.contains(&j) {
                seen.push(j);
            }
        }
        if seen.len() >= 10 {
            break;
        }
    }
    let outliers = seen.iter().take(10).filter(|&&j| mask[j]).count();
    println!("first 10 activated instances: {outliers}/10 are true outliers");

    // Coefficients between breakpoints interpolate linearly; query any λ.
    let mid = 0.5 * (path.breakpoints[1].lambda + path.breakpoints[2].lambda);
    let gamma = path.gamma_at(mid);
    println!(
        "gamma at midpoint λ={:.4e}: {} nonzero entries",
        mid,
        gamma.iter().filter(|v| **v != 0.0).count()
    );
    Ok(())
}
