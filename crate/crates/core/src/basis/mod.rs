//! Reduction bases: vibration modes, POD, and quadratic manifolds.

pub mod container;
pub mod eigen;
pub mod mapping;
pub mod pod;
pub mod smd;

pub use eigen::{vibration_modes, VibrationModes};
pub use mapping::{pair_count, pair_index, LinearBasis, Mapping, QuadraticManifold};
pub use pod::{pod_basis, Pod};
pub use smd::{quadratic_manifold, static_modal_derivatives};
