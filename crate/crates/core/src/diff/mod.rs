//! Define-by-run reverse-mode differentiation over small dense `f64` tensors.
//!
//! A [`Graph`] is rebuilt for every forward pass. Trainable tensors live in a
//! [`ParamSet`]; binding the set into a graph yields one leaf [`Var`] per
//! parameter, and [`ParamSet::accumulate`] routes the gradients of a
//! [`Graph::backward`] pass back onto the tensors. [`Adam`] consumes those
//! gradients.

mod adam;
mod graph;
mod tensor;

pub use adam::{Adam, AdamConfig};
pub use graph::{Gradients, Graph, Var};
pub use tensor::{ParamSet, Tensor};
