//! Geometrically nonlinear finite-element core.

pub mod assembly;
pub mod element;
pub mod load;
pub mod mesh;
pub mod mtx;
pub mod skyline;
pub mod sparse;
pub mod structure;

pub use element::{ElementKernel, ElementMatrix, ElementVector, Rayleigh, Section, VonKarmanFrame};
pub use load::{uniform_transverse_load, LoadCase, LoadFunction};
pub use mesh::{ElementDofs, EndSupport, Mesh, DOFS_PER_NODE, ELEMENT_DOFS};
pub use skyline::SkylineLdl;
pub use sparse::{SparseSymMatrix, SparsityPattern};
pub use structure::{LoadConfig, StripConfig, Structure, StructureConfig};
