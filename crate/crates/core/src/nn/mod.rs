//! Minimal feed-forward network engine: affine/ReLU MLPs, backpropagation,
//! SGD with momentum and weight decay, and a central-difference gradient
//! oracle.

mod gradcheck;
mod mlp;
mod sgd;

pub use gradcheck::{central_difference, finite_difference_gradient, max_relative_error};
pub use mlp::{ForwardCache, Gradients, MlpModel};
pub use sgd::{sgd_step, SgdState};
