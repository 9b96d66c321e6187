//! Envelope (skyline) `LDLᵀ` factorization for symmetric sparse matrices.
//!
//! No pivoting: fine for the SPD and Newmark-effective matrices this crate
//! produces, whose envelope is the mesh bandwidth.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::fe::sparse::SparseSymMatrix;

#[derive(Clone, Debug)]
pub struct SkylineLdl {
    n: usize,
    /// First stored row of each column.
    first: Vec<usize>,
    /// Offset of column `j`'s entries; column `j` holds rows `first[j]..=j`.
    offset: Vec<usize>,
    /// Unit lower factor entries `l_ji` stored column-wise (row `i < j`),
    /// with the pivots `d_j` on the diagonal slots.
    data: Vec<f64>,
}

impl SkylineLdl {
    pub fn factor(a: &SparseSymMatrix) -> Result<Self> {
        let n = a.n();
        let mut first: Vec<usize> = (0..n).collect();
        for (i, j, _) in a.iter_upper() {
            first[j] = first[j].min(i);
        }
        let mut offset = Vec::with_capacity(n + 1);
        offset.push(0);
        for j in 0..n {
            offset.push(offset[j] + (j - first[j] + 1));
        }
        let mut data = vec![0.0; offset[n]];
        for (i, j, v) in a.iter_upper() {
            data[offset[j] + (i - first[j])] = v;
        }
        let mut f = Self {
            n,
            first,
            offset,
            data,
        };
        f.decompose()?;
        Ok(f)
    }

    fn at(&self, i: usize, j: usize) -> usize {
        self.offset[j] + (i - self.first[j])
    }

    fn decompose(&mut self) -> Result<()> {
        for j in 0..self.n {
            let fj = self.first[j];
            let ajj = self.data[self.at(j, j)];
            // g_ij = a_ij - Σ_k l_ki g_kj
            for i in fj..j {
                let lo = self.first[i].max(fj);
                let mut acc = 0.0;
                for k in lo..i {
                    acc += self.data[self.at(k, i)] * self.data[self.at(k, j)];
                }
                let p = self.at(i, j);
                self.data[p] -= acc;
            }
            let mut d = ajj;
            for i in fj..j {
                let p = self.at(i, j);
                let g = self.data[p];
                let l = g / self.data[self.at(i, i)];
                d -= l * g;
                self.data[p] = l;
            }
            let scale = ajj.abs().max(f64::MIN_POSITIVE);
            if !d.is_finite() || d.abs() <= 1e-13 * scale {
                return Err(Error::Singular {
                    context: "skyline LDLᵀ",
                    pivot: j,
                    value: d,
                });
            }
            let p = self.at(j, j);
            self.data[p] = d;
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of negative pivots (the matrix inertia's negative count).
    pub fn negative_pivots(&self) -> usize {
        (0..self.n)
            .filter(|&j| self.data[self.at(j, j)] < 0.0)
            .count()
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = b.clone();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut DVector<f64>) {
        assert_eq!(x.len(), self.n);
        for j in 0..self.n {
            let mut acc = 0.0;
            for i in self.first[j]..j {
                acc += self.data[self.at(i, j)] * x[i];
            }
            x[j] -= acc;
        }
        for j in 0..self.n {
            x[j] /= self.data[self.at(j, j)];
        }
        for j in (0..self.n).rev() {
            let xj = x[j];
            for i in self.first[j]..j {
                x[i] -= self.data[self.at(i, j)] * xj;
            }
        }
    }
}
