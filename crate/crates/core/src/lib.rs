//! Hyper-reduction toolkit for geometrically nonlinear structural dynamics.
//!
//! The pipeline: a von Kármán frame model ([`fe`]) provides element-level
//! mass, damping, internal force and tangent; [`basis`] builds vibration
//! modes, POD bases and quadratic manifolds `Γ(q) = Φq + ½Ω:(q⊗q)`;
//! [`rom`] assembles tangent-space Galerkin reduced equations, optionally
//! evaluated on a sampled, weighted element set; [`hyper`] trains those
//! element sets by sparse non-negative least squares; [`integrator`]
//! advances full and reduced models with implicit Newmark and audits the
//! energy balance.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod error;
pub mod fe;
pub mod hyper;
pub mod integrator;
pub mod rom;

pub use error::{Error, Result};
