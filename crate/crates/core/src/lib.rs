//! Numerical laboratory for learning with graph-aggregated features: graph
//! generation, spectral analysis, tail-averaged SGD and ridge regression on
//! ReLU-readout data, exact excess-risk measurement and closed-form risk
//! bounds.

pub mod bounds;
pub mod error;
pub mod graph;
pub mod harness;
pub mod matrix;
pub mod risk;
pub mod rng;
pub mod learners;
pub mod spectral;
pub mod synthesis;

pub use error::{Error, Result};
pub use graph::{build_operator, Graph, GraphOperator, OperatorKind};
pub use matrix::Matrix;
pub use spectral::{eigh_symmetric, SpectralDecomposition};
