//! Training of a reduced mesh from snapshots.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::basis::container;
use crate::basis::mapping::Mapping;
use crate::error::{Error, Result};
use crate::hyper::nnls::{sparse_nnls, NnlsSolution};
use crate::hyper::recovery::{recover_q, recover_qddot, recover_qdot};
use crate::hyper::reduced_mesh::{Provenance, ReducedMesh};
use crate::rom::{ReducedModel, ReducedState};

#[derive(Clone, Debug)]
pub struct TrainingSet {
    pub states: Vec<ReducedState>,
    /// `‖Γ(q) − u‖ / ‖u‖` per snapshot; zero when no recovery was needed.
    pub recovery_residuals: Vec<f64>,
}

/// Full-order snapshot triples, one entry per stored time.
#[derive(Clone, Copy, Debug)]
pub struct Snapshots<'a> {
    pub times: &'a [f64],
    pub u: &'a [DVector<f64>],
    pub v: &'a [DVector<f64>],
    pub a: &'a [DVector<f64>],
}

#[derive(Clone, Debug)]
pub struct Trained {
    pub mesh: ReducedMesh,
    pub training: TrainingSet,
    pub nnls: NnlsSolution,
}

/// `n_t` indices spread evenly over `0..count`, endpoints included.
pub fn uniform_indices(count: usize, n_t: usize) -> Vec<usize> {
    if n_t >= count {
        return (0..count).collect();
    }
    if n_t == 1 {
        return vec![count - 1];
    }
    (0..n_t)
        .map(|i| ((i * (count - 1)) as f64 / (n_t - 1) as f64).round() as usize)
        .collect()
}

/// Hex SHA-256 digest of the mapping container bytes.
pub fn mapping_hash(mapping: &Mapping) -> String {
    Sha256::digest(container::encode(mapping))
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Reduced triples of the selected snapshots, recovered independently.
pub fn recover_training_set(
    mapping: &Mapping,
    snaps: Snapshots,
    indices: &[usize],
) -> Result<TrainingSet> {
    let results: Vec<(ReducedState, f64)> = indices
        .par_iter()
        .map(|&i| {
            let rec = recover_q(mapping, &snaps.u[i])?;
            let qdot = recover_qdot(mapping, &rec.q, &snaps.v[i])?;
            let qddot = recover_qddot(mapping, &rec.q, &qdot, &snaps.a[i])?;
            Ok((
                ReducedState::new(rec.q, qdot, qddot, snaps.times[i]),
                rec.residual,
            ))
        })
        .collect::<Result<_>>()?;
    let (states, recovery_residuals) = results.into_iter().unzip();
    Ok(TrainingSet {
        states,
        recovery_residuals,
    })
}

/// `G` with `m` rows per training state and one column per element, and
/// `b = G·1` accumulated in element order.
pub fn assemble_g_b(
    model: &ReducedModel,
    states: &[ReducedState],
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let m = model.dim();
    let n_e = model.structure().n_elements();
    let mut g = DMatrix::zeros(m * states.len(), n_e);
    let blocks: Vec<Vec<DVector<f64>>> = states
        .iter()
        .map(|s| model.element_projections(s))
        .collect::<Result<_>>()?;
    for (i, cols) in blocks.iter().enumerate() {
        for (e, c) in cols.iter().enumerate() {
            g.view_mut((i * m, e), (m, 1)).copy_from(c);
        }
    }
    let mut b = DVector::zeros(m * states.len());
    for e in 0..n_e {
        b += g.column(e);
    }
    Ok((g, b))
}

fn train_states(model: &ReducedModel, training: TrainingSet, tau: f64) -> Result<Trained> {
    let (g, b) = assemble_g_b(model, &training.states)?;
    let nnls = sparse_nnls(&g, &b, tau)?;
    if nnls.support.is_empty() {
        return Err(Error::EmptyReducedMesh);
    }
    let mesh = ReducedMesh {
        n_elements: model.structure().n_elements(),
        elements: nnls.support.clone(),
        weights: nnls.weights.clone(),
        tau,
        residual: nnls.residual,
        provenance: Provenance {
            n_t: training.states.len(),
            terms: model.terms(),
            hash: mapping_hash(model.mapping()),
        },
    };
    Ok(Trained {
        mesh,
        training,
        nnls,
    })
}

/// Trains on `n_t` full-order snapshots chosen uniformly over the record.
pub fn train(model: &ReducedModel, snaps: Snapshots, n_t: usize, tau: f64) -> Result<Trained> {
    let count = snaps.u.len();
    for (what, len) in [
        ("snapshot velocities", snaps.v.len()),
        ("snapshot accelerations", snaps.a.len()),
        ("snapshot times", snaps.times.len()),
    ] {
        if len != count {
            return Err(Error::DimensionMismatch {
                what,
                expected: count,
                found: len,
            });
        }
    }
    let indices = uniform_indices(count, n_t);
    let training = recover_training_set(model.mapping(), snaps, &indices)?;
    train_states(model, training, tau)
}

/// Trains directly on reduced states, e.g. from a run of the reduced model
/// itself, with no recovery step.
pub fn train_reduced(
    model: &ReducedModel,
    states: &[ReducedState],
    n_t: usize,
    tau: f64,
) -> Result<Trained> {
    let indices = uniform_indices(states.len(), n_t);
    let training = TrainingSet {
        states: indices.iter().map(|&i| states[i].clone()).collect(),
        recovery_residuals: vec![0.0; indices.len()],
    };
    train_states(model, training, tau)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_indices_cover_the_span() {
        assert_eq!(uniform_indices(5, 10), vec![0, 1, 2, 3, 4]);
        assert_eq!(uniform_indices(11, 3), vec![0, 5, 10]);
        assert_eq!(uniform_indices(1001, 200).len(), 200);
        let idx = uniform_indices(1001, 200);
        assert_eq!((idx[0], idx[199]), (0, 1000));
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
    }
}
