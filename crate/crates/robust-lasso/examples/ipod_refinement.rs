//! Refines a path-initialized outlier set with sparsity-matched hard
//! thresholding and compares detection quality before and after.

use ndarray::{concatenate, Array2, Axis};
use robust_lasso::bench::pipeline_benchmark_dataset;
use robust_lasso::plasso::ipod::ipod_refine;
use robust_lasso::plasso::path::lasso_path;
use robust_lasso::plasso::precondition::precondition;
use robust_lasso::plasso::report::select_outliers_count;

fn recall(selected: &[usize], mask: &[bool]) -> f64 {
    let truth = mask.iter().filter(|&&b| b).count();
    let hits = selected.iter().filter(|&&j| mask[j]).count();
    hits as f64 / truth as f64
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Scaled-out corruption: leverage points that partially mask
    // themselves from the path ranking, the case refinement helps.
    let ds = pipeline_benchmark_dataset(5)?;
    let mask = ds.outlier_mask.clone().unwrap();

    // The class labels are uncentered, so the regression design needs an
    // explicit intercept column.
    let ones = Array2::ones((ds.n(), 1));
    let design = concatenate(Axis(1), &[ds.features.view(), ones.view()])?;
    let pre = precondition(&design)?;
    let path = lasso_path(&pre, ds.labels.view())?;
    let init = select_outliers_count(&path, ds.outlier_count())?;
    println!(
        "path init: {} selected, recall {:.3}",
        init.selected.len(),
        recall(&init.selected, &mask)
    );

    let refined = ipod_refine(&pre, ds.labels.view(), &init.selected)?;
    println!(
        "refined:   {} selected, recall {:.3} (converged: {})",
        refined.support.len(),
        recall(&refined.support, &mask),
        refined.converged
    );
    Ok(())
}
