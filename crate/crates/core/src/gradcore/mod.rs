//! Reverse-mode automatic differentiation over dense tensors.
//!
//! A [`Graph`] records operations as they are applied; [`Graph::backward`]
//! sweeps them in reverse and accumulates gradients into differentiable
//! leaves. Leaves are parameters (borrowed from a model), inputs whose
//! gradient is wanted (the embedded document for adversarial directions),
//! or constants.

mod dropout;
mod graph;
mod losses;
mod ops;
mod scalar;
mod tensor;

pub use dropout::Dropout;
pub use graph::{Graph, Var, PROB_FLOOR};
pub use ops::dropout_mask;
pub use scalar::Scalar;
pub use tensor::{Tensor, NORM_FLOOR};
