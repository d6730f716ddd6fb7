//! Ranks instances by activation order and picks the outlier set two ways:
//! a fixed count and a cross-validated cut.

use robust_lasso::dataset::{generate_mislabeled, MislabelConfig};
use robust_lasso::plasso::path::lasso_path;
use robust_lasso::plasso::precondition::precondition;
use robust_lasso::plasso::report::{select_outliers_count, select_outliers_cv};

fn recall(selected: &[usize], mask: &[bool]) -> f64 {
    let truth = mask.iter().filter(|&&b| b).count();
    let hits = selected.iter().filter(|&&j| mask[j]).count();
    hits as f64 / truth as f64
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Collinear means interpolate the label values through the origin, so
    // the raw features serve directly as the regression design here.
    let ds = generate_mislabeled(&MislabelConfig {
        class_means: vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]],
        class_std: 0.1,
        per_class_count: 60,
        mislabeled_per_class: 6,
        mislabel_scale: 1.0,
        rng_seed: 2,
    })?;
    let mask = ds.outlier_mask.clone().unwrap();

    let pre = precondition(&ds.features)?;
    let path = lasso_path(&pre, ds.labels.view())?;

    // Rule 1: take as many as you believe exist.
    let by_count = select_outliers_count(&path, ds.outlier_count())?;
    println!(
        "count rule selected {} instances, recall {:.3}",
        by_count.selected.len(),
        recall(&by_count.selected, &mask)
    );

    // Rule 2: let held-out classifier accuracy choose the cut.
    let by_cv = select_outliers_cv(&path, &ds, 5)?;
    println!(
        "cv rule selected {} instances, recall {:.3}",
        by_cv.selected.len(),
        recall(&by_cv.selected, &mask)
    );
    if let Some(trace) = &by_cv.cv_trace {
        let best = trace
            .iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty trace");
        println!(
            "cv trace: {} breakpoints evaluated, best mean accuracy {:.3} at λ={:.4e}",
            trace.len(),
            best.1,
            best.0
        );
    }
    Ok(())
}
