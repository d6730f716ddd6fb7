//! Kernel-projected LASSO outlier machinery.
//!
//! Pipeline: [`precondition`] factors the design once; [`lasso_path`] traces
//! the full regularization path of the projected problem by homotopy;
//! [`order_by_activation`] turns the path into an instance ranking;
//! [`select_outliers_count`] / [`select_outliers_cv`] pick the cut;
//! [`ipod_refine`] optionally polishes a selection by alternating
//! hard thresholding.

pub mod coord_descent;
pub mod ipod;
pub mod path;
pub mod precondition;
pub mod report;

pub use coord_descent::{equivalence_check, lasso_coordinate_descent, lasso_objective, CdOptions, EquivalenceReport};
pub use ipod::{ipod_refine, IpodOptions, IpodResult};
pub use path::{kkt_violation, lasso_path, lasso_path_with, max_kkt_violation, Breakpoint, PathOptions, RegularizationPath};
pub use precondition::{precondition, precondition_with_tolerance, solve_beta, Preconditioner};
pub use report::{
    order_by_activation, select_outliers_count, select_outliers_cv, select_outliers_cv_with,
    CvOptions, OutlierReport, SelectionRule,
};
