//! Graph clustering by self-paced symmetric nonnegative matrix factorization.
//!
//! The pipeline: build a k-NN similarity matrix from feature vectors
//! ([`graph`]), factorize it as `X ≈ UVᵀ` with a symmetry penalty pulling
//! `U` toward `V` ([`solver`]), and schedule which samples participate in
//! the fit from easy to hard ([`selfpaced`]). Cluster labels come from the
//! dominant column of `U`, and [`metrics`] scores them against ground truth.

pub mod error;
pub mod graph;
pub mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod selfpaced;
pub mod solver;

pub use error::{Error, Result};
