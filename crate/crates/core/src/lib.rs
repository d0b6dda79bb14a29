//! Minimax Bayes risk error quantization of prior probabilities for group
//! minimax hypothesis testing.
//!
//! Priors on the probability simplex are grouped into `K` cells, each
//! represented by one decision weight, so that the worst-case excess Bayes
//! risk over all priors is as small as possible.

pub mod analysis;
pub mod cli;
pub mod divergence;
pub mod error;
pub mod io;
pub mod models;
pub mod numeric;
pub mod scalar;
pub mod simplex;
pub mod simplex_quant;

pub use divergence::{bre_divergence, minimax_weight, worst_vertex_divergence, DivergenceValue};
pub use error::{Error, Result};
pub use models::{BinaryGaussianModel, DetectionModel, ExponentialTernaryModel, Model, ModelSpec};
pub use simplex::SimplexPoint;
