//! Galerkin reduced models on linear bases and quadratic manifolds,
//! optionally evaluated on a sampled element set.

pub mod model;
pub mod terms;

pub use model::{ReducedJacobians, ReducedModel, ReducedOperators, ReducedState, Sampling};
pub use terms::TermSelection;
