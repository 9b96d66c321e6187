//! Global assembly over the element loop.
//!
//! Element kernels are evaluated in parallel; the scatter into global
//! storage always runs in element order so results are bit-identical for
//! any thread count.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fe::element::{ElementKernel, ElementMatrix, ElementVector};
use crate::fe::mesh::{ElementDofs, Mesh};
use crate::fe::sparse::SparseSymMatrix;
use crate::fe::SparsityPattern;

use std::sync::Arc;

const MIN_CHUNK: usize = 64;

/// Gather element-local values from a free-DOF vector; constrained DOFs read 0.
pub fn gather(dofs: &ElementDofs, u: &DVector<f64>) -> ElementVector {
    ElementVector::from_fn(|i, _| dofs[i].map_or(0.0, |g| u[g]))
}

pub fn scatter_add(dofs: &ElementDofs, fe: &ElementVector, f: &mut DVector<f64>) {
    for (i, d) in dofs.iter().enumerate() {
        if let Some(g) = d {
            f[*g] += fe[i];
        }
    }
}

pub fn element_state(
    mesh: &Mesh,
    u: &DVector<f64>,
    v: &DVector<f64>,
    e: usize,
) -> (ElementVector, ElementVector) {
    let dofs = mesh.element_dofs(e);
    (gather(dofs, u), gather(dofs, v))
}

fn check_len(mesh: &Mesh, u: &DVector<f64>) -> Result<()> {
    if u.len() != mesh.n_dofs() {
        return Err(Error::DimensionMismatch {
            what: "displacement vector",
            expected: mesh.n_dofs(),
            found: u.len(),
        });
    }
    Ok(())
}

fn assemble_constant(
    mesh: &Mesh,
    pattern: &Arc<SparsityPattern>,
    mut element: impl FnMut(usize) -> Result<ElementMatrix>,
) -> Result<SparseSymMatrix> {
    let mut out = SparseSymMatrix::zeros(pattern.clone());
    for e in 0..mesh.n_elements() {
        out.add_element(e, &element(e)?);
    }
    Ok(out)
}

pub fn assemble_mass<K: ElementKernel>(
    mesh: &Mesh,
    kernel: &K,
    pattern: &Arc<SparsityPattern>,
) -> Result<SparseSymMatrix> {
    assemble_constant(mesh, pattern, |e| {
        let m = kernel.mass(e);
        if m.cholesky().is_none() {
            return Err(Error::IndefiniteMass { element: e });
        }
        Ok(*m)
    })
}

pub fn assemble_damping<K: ElementKernel>(
    mesh: &Mesh,
    kernel: &K,
    pattern: &Arc<SparsityPattern>,
) -> Result<SparseSymMatrix> {
    assemble_constant(mesh, pattern, |e| Ok(*kernel.damping(e)))
}

pub fn assemble_internal_force<K: ElementKernel>(
    mesh: &Mesh,
    kernel: &K,
    u: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_len(mesh, u)?;
    let forces: Vec<ElementVector> = (0..mesh.n_elements())
        .into_par_iter()
        .with_min_len(MIN_CHUNK)
        .map(|e| kernel.internal_force(e, &gather(mesh.element_dofs(e), u)))
        .collect();
    let mut f = DVector::zeros(mesh.n_dofs());
    for (e, fe) in forces.iter().enumerate() {
        if !fe.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite { element: e });
        }
        scatter_add(mesh.element_dofs(e), fe, &mut f);
    }
    Ok(f)
}

pub fn assemble_tangent<K: ElementKernel>(
    mesh: &Mesh,
    kernel: &K,
    pattern: &Arc<SparsityPattern>,
    u: &DVector<f64>,
) -> Result<SparseSymMatrix> {
    Ok(assemble_force_and_tangent(mesh, kernel, pattern, u)?.1)
}

pub fn assemble_force_and_tangent<K: ElementKernel>(
    mesh: &Mesh,
    kernel: &K,
    pattern: &Arc<SparsityPattern>,
    u: &DVector<f64>,
) -> Result<(DVector<f64>, SparseSymMatrix)> {
    check_len(mesh, u)?;
    let parts: Vec<(ElementVector, ElementMatrix)> = (0..mesh.n_elements())
        .into_par_iter()
        .with_min_len(MIN_CHUNK)
        .map(|e| kernel.force_and_tangent(e, &gather(mesh.element_dofs(e), u)))
        .collect();
    let mut f = DVector::zeros(mesh.n_dofs());
    let mut k = SparseSymMatrix::zeros(pattern.clone());
    for (e, (fe, ke)) in parts.iter().enumerate() {
        if !fe.iter().chain(ke.iter()).all(|x| x.is_finite()) {
            return Err(Error::NonFinite { element: e });
        }
        scatter_add(mesh.element_dofs(e), fe, &mut f);
        k.add_element(e, ke);
    }
    Ok((f, k))
}

/// Total strain energy `V(u) = Σ_e V_e(u_e)`.
pub fn strain_energy<K: ElementKernel>(mesh: &Mesh, kernel: &K, u: &DVector<f64>) -> Result<f64> {
    check_len(mesh, u)?;
    let parts: Vec<f64> = (0..mesh.n_elements())
        .into_par_iter()
        .with_min_len(MIN_CHUNK)
        .map(|e| kernel.strain_energy(e, &gather(mesh.element_dofs(e), u)))
        .collect();
    Ok(parts.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fe::element::{Rayleigh, Section, VonKarmanFrame};
    use crate::fe::mesh::EndSupport;

    fn setup(n_el: usize, left: EndSupport) -> (Mesh, VonKarmanFrame, Arc<SparsityPattern>) {
        let mesh = Mesh::strip(10.0, n_el, left, EndSupport::Free).unwrap();
        let section = Section::plate_strip(200.0, 0.3, 1.0, 1.0, 0.2);
        let kernel = VonKarmanFrame::new(&mesh, section, Rayleigh::default()).unwrap();
        let pattern = Arc::new(SparsityPattern::from_mesh(&mesh));
        (mesh, kernel, pattern)
    }

    #[test]
    fn single_element_mass_is_element_matrix() {
        let (mesh, kernel, pattern) = setup(1, EndSupport::Free);
        let m = assemble_mass(&mesh, &kernel, &pattern).unwrap();
        let dense = m.to_dense();
        let me = kernel.mass(0);
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(dense[(i, j)], me[(i, j)]);
            }
        }
    }

    #[test]
    fn shared_node_diagonal_sums_both_elements() {
        let (mesh, kernel, pattern) = setup(2, EndSupport::Free);
        let m = assemble_mass(&mesh, &kernel, &pattern).unwrap();
        let (m0, m1) = (kernel.mass(0), kernel.mass(1));
        for k in 0..3 {
            let g = mesh.dof(1, k).unwrap();
            assert_eq!(m.get(g, g), m0[(3 + k, 3 + k)] + m1[(k, k)]);
        }
        // End nodes receive a single contribution.
        assert_eq!(m.get(0, 0), m0[(0, 0)]);
    }

    #[test]
    fn gather_reads_zero_on_constrained_dofs() {
        let (mesh, _, _) = setup(3, EndSupport::Clamped);
        let u = DVector::from_element(mesh.n_dofs(), 1.0);
        let ue = gather(mesh.element_dofs(0), &u);
        assert_eq!(&ue.as_slice()[..3], &[0.0, 0.0, 0.0]);
        assert_eq!(&ue.as_slice()[3..], &[1.0, 1.0, 1.0]);

        let mut unit = DVector::zeros(mesh.n_dofs());
        unit[4] = 1.0;
        let ue = gather(mesh.element_dofs(1), &unit);
        assert_eq!(ue.iter().filter(|x| **x != 0.0).count(), 1);
    }

    #[test]
    fn force_is_sum_of_scattered_element_forces() {
        let (mesh, kernel, _) = setup(4, EndSupport::Clamped);
        let u = DVector::from_fn(mesh.n_dofs(), |i, _| 0.01 * ((i * 37 % 11) as f64 - 5.0));
        let f = assemble_internal_force(&mesh, &kernel, &u).unwrap();
        let mut manual = DVector::zeros(mesh.n_dofs());
        for e in 0..mesh.n_elements() {
            let fe = kernel.internal_force(e, &gather(mesh.element_dofs(e), &u));
            scatter_add(mesh.element_dofs(e), &fe, &mut manual);
        }
        assert_eq!(f, manual);
    }

    #[test]
    fn wrong_length_is_rejected() {
        let (mesh, kernel, _) = setup(2, EndSupport::Clamped);
        let u = DVector::zeros(mesh.n_dofs() + 1);
        assert!(matches!(
            assemble_internal_force(&mesh, &kernel, &u),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
