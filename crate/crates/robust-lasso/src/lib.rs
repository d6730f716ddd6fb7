//! Outlier detection for labeled datasets.
//!
//! The core idea: regress the (real-encoded) labels on the features with one
//! extra unknown per instance, and put an L1 penalty on those per-instance
//! terms. Projecting the regression onto the kernel of the design removes
//! the nuisance coefficients entirely, leaving a pure LASSO whose
//! regularization path orders instances by how badly they fit. Heavily
//! corrupted instances activate first.
//!
//! The crate provides:
//! - [`dataset`]: data model, synthetic generators, CSV/JSON I/O.
//! - [`plasso`]: kernel-projected LASSO path, instance ranking, λ selection,
//!   and an iterative hard-thresholding baseline.
//! - [`tdca`]: diffusion-map style dimensionality reduction driven by a lazy
//!   random walk on a k-NN similarity graph.
//! - [`classify`]: small linear one-vs-rest classifier and label propagation,
//!   used to score how much outlier removal helps downstream.
//! - [`bench`]: end-to-end experiment drivers with exportable artifacts.

pub mod bench;
pub mod classify;
pub mod config;
pub mod dataset;
pub mod error;
pub mod plasso;
pub mod tdca;

pub use error::{Error, Result};
