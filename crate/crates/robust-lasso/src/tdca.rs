//! Transductive diffusion component analysis.
//!
//! Dimensionality reduction for the detection and classification stages,
//! run jointly over training and test instances (test labels are never
//! consulted, only feature rows). Three stages, each its own submodule:
//!
//! 1. [`graph`]: a directed k-nearest-neighbour similarity graph whose edge
//!    weights are exponentials of squared inner products, normalised per row
//!    into a stochastic transition matrix.
//! 2. [`walk`]: per-node lazy random walks with restart, iterated to their
//!    stationary distributions (the diffusion states).
//! 3. [`embedding`]: low-dimensional node/context vectors fitted so that a
//!    softmax over their inner products reconstructs the diffusion states,
//!    by minimising the mean KL divergence with L-BFGS.
//!
//! The node vectors (`reduced_features`) feed the outlier detector in place
//! of raw features when the raw dimension is too large for the design kernel
//! to exist; node and context vectors together (`concat_features`) feed the
//! final classifier.

pub mod embedding;
pub mod graph;
mod lbfgs;
pub mod walk;

pub use embedding::{fit_embedding, kl_objective_and_gradient, EmbedOptions, Embedding};
pub use graph::{build_graph, build_graph_with, DiffusionGraph, GraphOptions};
pub use walk::{
    diffusion_states, lazy_random_walk, stationary_oracle, DiffusionStates, DEFAULT_RESTART_PROB,
    DEFAULT_WALK_MAX_ITER, DEFAULT_WALK_TOL,
};
