use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DOFS_PER_NODE: usize = 3;
pub const ELEMENT_DOFS: usize = 2 * DOFS_PER_NODE;

/// Global DOF indices of one element, `None` where the DOF is constrained.
pub type ElementDofs = [Option<usize>; ELEMENT_DOFS];

/// Support condition at one end of a generated strip.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EndSupport {
    Free,
    /// Transverse displacement fixed only.
    Roller,
    /// Axial and transverse displacement fixed, rotation free.
    Pinned,
    Clamped,
}

impl EndSupport {
    fn fixed_local_dofs(self) -> &'static [usize] {
        match self {
            EndSupport::Free => &[],
            EndSupport::Roller => &[1],
            EndSupport::Pinned => &[0, 1],
            EndSupport::Clamped => &[0, 1, 2],
        }
    }
}

/// Plane-frame mesh with three DOFs per node (axial `u`, transverse `w`,
/// rotation `θ`). Constrained DOFs are eliminated; the free ones are
/// numbered node by node, so a strip mesh yields a banded system.
#[derive(Clone, Debug)]
pub struct Mesh {
    nodes: Vec<[f64; 2]>,
    elements: Vec<[usize; 2]>,
    fixed: BTreeSet<usize>,
    dof_map: Vec<Option<usize>>,
    element_dofs: Vec<ElementDofs>,
    n_free: usize,
}

impl Mesh {
    /// `fixed` lists constrained DOFs as `3 * node + local` indices.
    pub fn new(
        nodes: Vec<[f64; 2]>,
        elements: Vec<[usize; 2]>,
        fixed: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let n_nodes = nodes.len();
        for (e, &[a, b]) in elements.iter().enumerate() {
            if a >= n_nodes || b >= n_nodes {
                return Err(Error::InvalidMesh(format!(
                    "element {e} references a missing node"
                )));
            }
            if a == b {
                return Err(Error::InvalidMesh(format!(
                    "element {e} connects node {a} to itself"
                )));
            }
            let (pa, pb) = (nodes[a], nodes[b]);
            let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
            if !(len > 0.0) {
                return Err(Error::InvalidMesh(format!("element {e} has zero length")));
            }
        }
        let fixed: BTreeSet<usize> = fixed.into_iter().collect();
        if let Some(&bad) = fixed.iter().find(|&&d| d >= DOFS_PER_NODE * n_nodes) {
            return Err(Error::InvalidMesh(format!("fixed DOF {bad} out of range")));
        }

        let mut dof_map = vec![None; DOFS_PER_NODE * n_nodes];
        let mut next = 0;
        for (g, slot) in dof_map.iter_mut().enumerate() {
            if !fixed.contains(&g) {
                *slot = Some(next);
                next += 1;
            }
        }
        let element_dofs = elements
            .iter()
            .map(|&[a, b]| {
                let mut d = [None; ELEMENT_DOFS];
                for k in 0..DOFS_PER_NODE {
                    d[k] = dof_map[DOFS_PER_NODE * a + k];
                    d[DOFS_PER_NODE + k] = dof_map[DOFS_PER_NODE * b + k];
                }
                d
            })
            .collect();

        Ok(Self {
            nodes,
            elements,
            fixed,
            dof_map,
            element_dofs,
            n_free: next,
        })
    }

    /// Straight strip along the x axis from `0` to `length`, split into
    /// `n_elements` equal elements.
    pub fn strip(
        length: f64,
        n_elements: usize,
        left: EndSupport,
        right: EndSupport,
    ) -> Result<Self> {
        if n_elements == 0 || !(length > 0.0) {
            return Err(Error::InvalidMesh(
                "strip needs a positive length and at least one element".into(),
            ));
        }
        let nodes = (0..=n_elements)
            .map(|i| [length * i as f64 / n_elements as f64, 0.0])
            .collect();
        let elements = (0..n_elements).map(|i| [i, i + 1]).collect();
        let last = n_elements;
        let fixed = left
            .fixed_local_dofs()
            .iter()
            .copied()
            .chain(
                right
                    .fixed_local_dofs()
                    .iter()
                    .map(|&k| DOFS_PER_NODE * last + k),
            )
            .collect::<Vec<_>>();
        Self::new(nodes, elements, fixed)
    }

    /// Number of free DOFs.
    pub fn n_dofs(&self) -> usize {
        self.n_free
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn elements(&self) -> &[[usize; 2]] {
        &self.elements
    }

    pub fn fixed_dofs(&self) -> &BTreeSet<usize> {
        &self.fixed
    }

    /// Free-DOF index of `(node, local)`, `None` if constrained.
    pub fn dof(&self, node: usize, local: usize) -> Option<usize> {
        self.dof_map[DOFS_PER_NODE * node + local]
    }

    pub fn element_dofs(&self, e: usize) -> &ElementDofs {
        &self.element_dofs[e]
    }

    pub fn all_element_dofs(&self) -> &[ElementDofs] {
        &self.element_dofs
    }

    pub fn element_length(&self, e: usize) -> f64 {
        let [a, b] = self.elements[e];
        let (pa, pb) = (self.nodes[a], self.nodes[b]);
        ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt()
    }

    /// Direction cosines `(cos, sin)` of element `e`'s axis.
    pub fn element_direction(&self, e: usize) -> (f64, f64) {
        let [a, b] = self.elements[e];
        let (pa, pb) = (self.nodes[a], self.nodes[b]);
        let len = self.element_length(e);
        ((pb[0] - pa[0]) / len, (pb[1] - pa[1]) / len)
    }

    /// Largest extent of the node bounding box.
    pub fn characteristic_length(&self) -> f64 {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &self.nodes {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (hi[0] - lo[0]).max(hi[1] - lo[1])
    }

    /// Free DOF indices of the given local direction (0 = axial, 1 =
    /// transverse, 2 = rotation) over all nodes.
    pub fn dofs_of_kind(&self, local: usize) -> Vec<usize> {
        (0..self.n_nodes())
            .filter_map(|node| self.dof(node, local))
            .collect()
    }
}
