//! Symmetric sparse matrices with an assembly pattern fixed by the mesh.
//!
//! Only the upper triangle (`col >= row`) is stored, so symmetry holds by
//! construction. Element-to-storage slot maps are computed once per mesh
//! and shared between all matrices built on the same pattern.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fe::element::ElementMatrix;
use crate::fe::mesh::{ElementDofs, Mesh, ELEMENT_DOFS};

const NO_SLOT: usize = usize::MAX;

#[derive(Debug, PartialEq, Eq)]
pub struct SparsityPattern {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    /// For each element, storage slot of local entry `(i, j)` at `6 * i + j`,
    /// set only where the global pair lies in the upper triangle.
    element_slots: Vec<[usize; ELEMENT_DOFS * ELEMENT_DOFS]>,
}

impl SparsityPattern {
    pub fn from_mesh(mesh: &Mesh) -> Self {
        Self::from_element_dofs(mesh.n_dofs(), mesh.all_element_dofs())
    }

    pub fn from_element_dofs(n: usize, dofs: &[ElementDofs]) -> Self {
        let mut rows: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for d in dofs {
            for gi in d.iter().flatten() {
                for gj in d.iter().flatten() {
                    if gj > gi {
                        rows[*gi].push(*gj);
                    }
                }
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for r in &mut rows {
            r.sort_unstable();
            r.dedup();
            col_idx.extend_from_slice(r);
            row_ptr.push(col_idx.len());
        }
        let mut pattern = Self {
            n,
            row_ptr,
            col_idx,
            element_slots: Vec::new(),
        };
        pattern.element_slots = dofs
            .iter()
            .map(|d| {
                let mut slots = [NO_SLOT; ELEMENT_DOFS * ELEMENT_DOFS];
                for i in 0..ELEMENT_DOFS {
                    for j in 0..ELEMENT_DOFS {
                        if let (Some(gi), Some(gj)) = (d[i], d[j]) {
                            if gj >= gi {
                                slots[ELEMENT_DOFS * i + j] =
                                    pattern.slot(gi, gj).expect("pattern covers element");
                            }
                        }
                    }
                }
                slots
            })
            .collect();
        pattern
    }

    /// Dense upper-triangle pattern of dimension `n`.
    fn dense(n: usize) -> Self {
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        for i in 0..n {
            col_idx.extend(i..n);
            row_ptr.push(col_idx.len());
        }
        Self {
            n,
            row_ptr,
            col_idx,
            element_slots: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz_upper(&self) -> usize {
        self.col_idx.len()
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[lo..hi].binary_search(&j).ok().map(|k| lo + k)
    }

    pub(crate) fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        self.row_ptr[i]..self.row_ptr[i + 1]
    }
}

#[derive(Clone, Debug)]
pub struct SparseSymMatrix {
    pattern: Arc<SparsityPattern>,
    values: Vec<f64>,
}

impl SparseSymMatrix {
    pub fn zeros(pattern: Arc<SparsityPattern>) -> Self {
        let values = vec![0.0; pattern.nnz_upper()];
        Self { pattern, values }
    }

    /// Upper triangle of a dense matrix, keeping every entry (including zeros).
    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols(), "matrix must be square");
        let pattern = Arc::new(SparsityPattern::dense(a.nrows()));
        let mut values = Vec::with_capacity(pattern.nnz_upper());
        for i in 0..a.nrows() {
            for j in i..a.ncols() {
                values.push(a[(i, j)]);
            }
        }
        Self { pattern, values }
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn n(&self) -> usize {
        self.pattern.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Scatter-add an element matrix for element `e` of the pattern's mesh.
    pub fn add_element(&mut self, e: usize, ke: &ElementMatrix) {
        let slots = &self.pattern.element_slots[e];
        for i in 0..ELEMENT_DOFS {
            for j in 0..ELEMENT_DOFS {
                let s = slots[ELEMENT_DOFS * i + j];
                if s != NO_SLOT {
                    self.values[s] += ke[(i, j)];
                }
            }
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.pattern.slot(a, b).map_or(0.0, |s| self.values[s])
    }

    /// Iterator over stored upper-triangle entries `(row, col, value)`.
    pub fn iter_upper(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n()).flat_map(move |i| {
            self.pattern
                .row_range(i)
                .map(move |k| (i, self.pattern.col_idx[k], self.values[k]))
        })
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.n());
        let mut y = DVector::zeros(self.n());
        for i in 0..self.n() {
            let xi = x[i];
            let mut acc = 0.0;
            for k in self.pattern.row_range(i) {
                let j = self.pattern.col_idx[k];
                let v = self.values[k];
                acc += v * x[j];
                if j != i {
                    y[j] += v * xi;
                }
            }
            y[i] += acc;
        }
        y
    }

    pub fn quad_form(&self, x: &DVector<f64>) -> f64 {
        x.dot(&self.mul_vec(x))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n(), self.n());
        for (i, j, v) in self.iter_upper() {
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
        a
    }

    /// `Σ cₖ Aₖ` over matrices sharing one pattern.
    pub fn linear_combination(terms: &[(f64, &SparseSymMatrix)]) -> Result<Self> {
        let first = terms.first().ok_or(Error::DimensionMismatch {
            what: "linear combination",
            expected: 1,
            found: 0,
        })?;
        let mut out = Self::zeros(first.1.pattern.clone());
        for (c, m) in terms {
            if !Arc::ptr_eq(&m.pattern, &out.pattern) && *m.pattern != *out.pattern {
                return Err(Error::Format(
                    "matrices do not share a sparsity pattern".into(),
                ));
            }
            for (o, v) in out.values.iter_mut().zip(&m.values) {
                *o += c * v;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fe::mesh::EndSupport;

    #[test]
    fn dense_roundtrip_and_matvec() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, -1.0, 0.5, -1.0, 2.0]);
        let s = SparseSymMatrix::from_dense(&a);
        assert_eq!(s.to_dense(), a);
        let x = DVector::from_vec(vec![1.0, -2.0, 0.25]);
        assert!((s.mul_vec(&x) - &a * &x).norm() < 1e-14);
        assert_eq!(s.get(2, 1), -1.0);
    }

    #[test]
    fn strip_pattern_is_banded() {
        let mesh = Mesh::strip(1.0, 5, EndSupport::Pinned, EndSupport::Pinned).unwrap();
        let p = SparsityPattern::from_mesh(&mesh);
        for i in 0..p.n() {
            for k in p.row_range(i) {
                assert!(p.col_idx[k] - i <= 5);
            }
        }
    }
}
