//! Linear bases and quadratic manifolds.
//!
//! The third-order tensor `Ω` is stored packed: one column per unordered
//! mode pair `(i, j)` with `i <= j`, in row-major pair order. Symmetry in
//! the last two indices therefore holds by construction.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Number of unordered pairs `(i, j)`, `i <= j`, over `m` modes.
pub fn pair_count(m: usize) -> usize {
    m * (m + 1) / 2
}

/// Packed column of pair `(i, j)`; order of the arguments does not matter.
pub fn pair_index(m: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    // row `i` starts after Σ_{r<i} (m - r) entries
    i * m - i * i.saturating_sub(1) / 2 + (j - i)
}

/// Packed symmetric products `s` with `Ω s = Ω:(x⊗x)`.
pub(crate) fn pair_products(x: &DVector<f64>) -> DVector<f64> {
    let m = x.len();
    let mut s = DVector::zeros(pair_count(m));
    let mut p = 0;
    for i in 0..m {
        for j in i..m {
            s[p] = if i == j {
                x[i] * x[i]
            } else {
                2.0 * x[i] * x[j]
            };
            p += 1;
        }
    }
    s
}

/// `pairs × m` matrix `T(x)` with `Ω T(x) = Ω·x` (column `k` is `Σ_i Ω_ik x_i`).
pub(crate) fn pair_jacobian(x: &DVector<f64>) -> DMatrix<f64> {
    let m = x.len();
    let mut t = DMatrix::zeros(pair_count(m), m);
    let mut p = 0;
    for i in 0..m {
        for j in i..m {
            t[(p, i)] += x[j];
            if i != j {
                t[(p, j)] += x[i];
            }
            p += 1;
        }
    }
    t
}

/// `m × m` matrix `H_ik = c_(ik)` from packed pair coefficients `c = Ωᵀh`.
pub(crate) fn unpack_pairs(m: usize, c: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |i, k| c[pair_index(m, i, k)])
}

fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearBasis {
    v: DMatrix<f64>,
}

impl LinearBasis {
    pub fn new(v: DMatrix<f64>) -> Result<Self> {
        let m = v.ncols();
        if m == 0 || m > v.nrows() {
            return Err(Error::RankDeficient {
                rank: m.min(v.nrows()),
                required: m.max(1),
            });
        }
        let qr = v.clone().qr();
        let r = qr.r();
        let diag: Vec<f64> = (0..m).map(|k| r[(k, k)].abs()).collect();
        let max = diag.iter().cloned().fold(0.0, f64::max);
        let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min > 1e-12 * max) {
            return Err(Error::IllConditioned {
                condition: max / min,
            });
        }
        Ok(Self { v })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn n(&self) -> usize {
        self.v.nrows()
    }

    pub fn dim(&self) -> usize {
        self.v.ncols()
    }
}

/// `Γ(q) = Φq + ½Ω:(q⊗q)`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticManifold {
    phi: DMatrix<f64>,
    /// `n × m(m+1)/2`, column `pair_index(m, i, j)` holds `Ω_{·ij}`.
    omega: DMatrix<f64>,
}

impl QuadraticManifold {
    pub fn new(phi: DMatrix<f64>, omega: DMatrix<f64>) -> Result<Self> {
        check_dim("manifold tensor rows", phi.nrows(), omega.nrows())?;
        check_dim(
            "manifold tensor pairs",
            pair_count(phi.ncols()),
            omega.ncols(),
        )?;
        Ok(Self { phi, omega })
    }

    /// Manifold with `Ω = 0`.
    pub fn flat(phi: DMatrix<f64>) -> Self {
        let omega = DMatrix::zeros(phi.nrows(), pair_count(phi.ncols()));
        Self { phi, omega }
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn omega_packed(&self) -> &DMatrix<f64> {
        &self.omega
    }

    pub fn omega(&self, i: usize, j: usize) -> DVector<f64> {
        self.omega.column(pair_index(self.dim(), i, j)).into_owned()
    }

    pub fn n(&self) -> usize {
        self.phi.nrows()
    }

    pub fn dim(&self) -> usize {
        self.phi.ncols()
    }

    pub fn eval(&self, q: &DVector<f64>) -> DVector<f64> {
        &self.phi * q + (&self.omega * pair_products(q)) * 0.5
    }

    pub fn tangent(&self, q: &DVector<f64>) -> DMatrix<f64> {
        &self.phi + &self.omega * pair_jacobian(q)
    }

    /// `Ω:(x⊗x)`.
    pub fn curvature(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.omega * pair_products(x)
    }

    /// `Ω·x`, the `n × m` matrix with column `k` equal to `Σ_i Ω_ik x_i`.
    pub fn contract(&self, x: &DVector<f64>) -> DMatrix<f64> {
        &self.omega * pair_jacobian(x)
    }

    /// `m × m` matrix `H_ik = Ω_ikᵀ h`.
    pub fn project(&self, h: &DVector<f64>) -> DMatrix<f64> {
        unpack_pairs(self.dim(), &self.omega.tr_mul(h))
    }

    fn restrict(&self, rows: &[usize]) -> Self {
        Self {
            phi: self.phi.select_rows(rows),
            omega: self.omega.select_rows(rows),
        }
    }
}

/// Reduction mapping `u ≈ Γ(q)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Mapping {
    Linear(LinearBasis),
    Quadratic(QuadraticManifold),
}

impl Mapping {
    pub fn n(&self) -> usize {
        match self {
            Mapping::Linear(b) => b.n(),
            Mapping::Quadratic(qm) => qm.n(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Mapping::Linear(b) => b.dim(),
            Mapping::Quadratic(qm) => qm.dim(),
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, Mapping::Linear(_))
    }

    /// `Φ` for a manifold, `V` for a linear basis.
    pub fn linear_part(&self) -> &DMatrix<f64> {
        match self {
            Mapping::Linear(b) => b.matrix(),
            Mapping::Quadratic(qm) => qm.phi(),
        }
    }

    fn check_q(&self, q: &DVector<f64>) -> Result<()> {
        check_dim("reduced coordinates", self.dim(), q.len())
    }

    pub fn eval(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_q(q)?;
        Ok(match self {
            Mapping::Linear(b) => b.matrix() * q,
            Mapping::Quadratic(qm) => qm.eval(q),
        })
    }

    /// `P_Γ(q) = ∂Γ/∂q`.
    pub fn tangent(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_q(q)?;
        Ok(match self {
            Mapping::Linear(b) => b.matrix().clone(),
            Mapping::Quadratic(qm) => qm.tangent(q),
        })
    }

    /// `(∂²Γ/∂q∂q · q̇)·q̇ = Ω:(q̇⊗q̇)`.
    pub fn curvature(&self, qdot: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_q(qdot)?;
        Ok(match self {
            Mapping::Linear(b) => DVector::zeros(b.n()),
            Mapping::Quadratic(qm) => qm.curvature(qdot),
        })
    }

    /// `(Γ, Γ̇, Γ̈)` along a reduced state.
    pub fn lift(
        &self,
        q: &DVector<f64>,
        qdot: &DVector<f64>,
        qddot: &DVector<f64>,
    ) -> Result<(DVector<f64>, DVector<f64>, DVector<f64>)> {
        self.check_q(qdot)?;
        self.check_q(qddot)?;
        let u = self.eval(q)?;
        let p = self.tangent(q)?;
        let v = &p * qdot;
        let a = &p * qddot + self.curvature(qdot)?;
        Ok((u, v, a))
    }

    /// Rows of the mapping at the given DOFs.
    pub fn restrict(&self, rows: &[usize]) -> Mapping {
        match self {
            Mapping::Linear(b) => Mapping::Linear(LinearBasis {
                v: b.matrix().select_rows(rows),
            }),
            Mapping::Quadratic(qm) => Mapping::Quadratic(qm.restrict(rows)),
        }
    }
}
