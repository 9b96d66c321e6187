//! Lowest modes of `K φ = ω² M φ` by inverse subspace iteration with
//! Rayleigh–Ritz projection.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::fe::skyline::SkylineLdl;
use crate::fe::sparse::SparseSymMatrix;

const MAX_ITERATIONS: usize = 500;
const RESIDUAL_TOL: f64 = 1e-10;
/// Looser residual accepted once the eigenvalues have settled to round-off.
const STALL_TOL: f64 = 1e-10;
const STALLED_RESIDUAL_TOL: f64 = 1e-4;

#[derive(Clone, Debug)]
pub struct VibrationModes {
    /// Circular frequencies `ω`, ascending.
    pub frequencies: Vec<f64>,
    /// Mass-normalized mode shapes as columns.
    pub shapes: DMatrix<f64>,
}

fn m_inner(mass: &SparseSymMatrix, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.dot(&mass.mul_vec(b))
}

/// Two-pass modified Gram–Schmidt in the `M` inner product.
fn m_orthonormalize(mass: &SparseSymMatrix, x: &mut DMatrix<f64>) {
    for k in 0..x.ncols() {
        let mut v = x.column(k).into_owned();
        for _ in 0..2 {
            let mv = mass.mul_vec(&v);
            for j in 0..k {
                let c = x.column(j).dot(&mv);
                v -= x.column(j) * c;
            }
        }
        let norm = m_inner(mass, &v, &v).sqrt();
        x.set_column(k, &(v / norm));
    }
}

/// Generalized symmetric eigenproblem `A z = λ B z` for small dense `B` SPD.
fn small_generalized(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let b = (b + b.transpose()) * 0.5;
    let chol = b.cholesky().ok_or(Error::Singular {
        context: "Rayleigh–Ritz mass projection",
        pivot: 0,
        value: 0.0,
    })?;
    let l = chol.l();
    let linv = l.clone().try_inverse().ok_or(Error::Singular {
        context: "Rayleigh–Ritz factor",
        pivot: 0,
        value: 0.0,
    })?;
    let c = &linv * a * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let z = DMatrix::from_fn(a.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    Ok((values, linv.transpose() * z))
}

/// Deterministic start block: the all-ones vector followed by cosine
/// patterns over the DOF index.
fn start_block(n: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |i, k| {
        if k == 0 {
            1.0
        } else {
            (std::f64::consts::PI * k as f64 * (i as f64 + 0.5) / n as f64).cos()
        }
    })
}

pub fn vibration_modes(
    mass: &SparseSymMatrix,
    stiffness: &SparseSymMatrix,
    count: usize,
) -> Result<VibrationModes> {
    let n = mass.n();
    if stiffness.n() != n {
        return Err(Error::DimensionMismatch {
            what: "stiffness matrix",
            expected: n,
            found: stiffness.n(),
        });
    }
    if count > n {
        return Err(Error::TooManyModes {
            requested: count,
            available: n,
        });
    }
    if count == 0 {
        return Ok(VibrationModes {
            frequencies: Vec::new(),
            shapes: DMatrix::zeros(n, 0),
        });
    }
    let p = n.min((2 * count).max(count + 8));
    let factor = SkylineLdl::factor(stiffness)?;

    let mut x = start_block(n, p);
    m_orthonormalize(mass, &mut x);
    let mut worst = f64::INFINITY;
    let mut previous: Vec<f64> = vec![f64::INFINITY; count];
    for _ in 0..MAX_ITERATIONS {
        let mut y = DMatrix::zeros(n, p);
        let mut mx = DMatrix::zeros(n, p);
        for k in 0..p {
            let rhs = mass.mul_vec(&x.column(k).into_owned());
            y.set_column(k, &factor.solve(&rhs));
            mx.set_column(k, &rhs);
        }
        let mut my = DMatrix::zeros(n, p);
        for k in 0..p {
            my.set_column(k, &mass.mul_vec(&y.column(k).into_owned()));
        }
        // K y = M x, so the projected stiffness needs no product with K.
        let kr = y.tr_mul(&mx);
        let kr = (&kr + kr.transpose()) * 0.5;
        let mr = y.tr_mul(&my);
        let (vals, z) = small_generalized(&kr, &mr)?;
        x = &y * &z;
        let mx = &my * &z;
        worst = 0.0;
        for k in 0..count {
            // Inverse-iteration residual x − λK⁻¹Mx in the mass norm.
            let xk = x.column(k).into_owned();
            let r = &xk - factor.solve(&mx.column(k).into_owned()) * vals[k];
            let scale = mass.quad_form(&xk).sqrt().max(f64::MIN_POSITIVE);
            worst = f64::max(worst, mass.quad_form(&r).max(0.0).sqrt() / scale);
        }
        let stalled =
            (0..count).all(|k| (vals[k] - previous[k]).abs() <= STALL_TOL * vals[k].abs());
        previous.copy_from_slice(&vals[..count]);
        if worst <= RESIDUAL_TOL || (stalled && worst <= STALLED_RESIDUAL_TOL) || p == n {
            let mut shapes = x.columns(0, count).into_owned();
            m_orthonormalize(mass, &mut shapes);
            for k in 0..count {
                let mut col = shapes.column_mut(k);
                let imax = col.iamax();
                if col[imax] < 0.0 {
                    col.neg_mut();
                }
            }
            let frequencies = vals[..count].iter().map(|l| l.max(0.0).sqrt()).collect();
            return Ok(VibrationModes {
                frequencies,
                shapes,
            });
        }
    }
    Err(Error::EigenNonConvergence {
        iterations: MAX_ITERATIONS,
        residual: worst,
    })
}
