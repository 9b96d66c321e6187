//! Training of sampled element sets: snapshot recovery, `G`/`b` assembly
//! and sparse non-negative least squares.

pub mod lstsq;
pub mod nnls;
pub mod recovery;
pub mod reduced_mesh;
pub mod train;

pub use nnls::{sparse_nnls, NnlsSolution};
pub use recovery::{recover_q, recover_qddot, recover_qdot, Recovered};
pub use reduced_mesh::{Provenance, ReducedMesh};
pub use train::{
    assemble_g_b, mapping_hash, recover_training_set, train, train_reduced, uniform_indices,
    Snapshots, Trained, TrainingSet,
};
