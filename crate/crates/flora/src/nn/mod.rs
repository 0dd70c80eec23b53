//! Minimal deterministic feed-forward network machinery: dense matrices,
//! MLP forward/backward with exact analytic gradients, and an Adam
//! optimizer. Shared by the frozen measures and the hash model.

mod adam;
mod matrix;
mod mlp;

pub use adam::OptimizerState;
pub use matrix::Matrix;
pub use mlp::{
    finite_difference_grad, max_grad_error, Activation, DenseLayer, ForwardCache, MlpGrads,
    MlpParams,
};
