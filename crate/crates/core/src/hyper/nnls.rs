//! Sparse non-negative least squares by an active-set method that stops as
//! soon as `‖Gξ − b‖ <= τ‖b‖`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hyper::lstsq::pivoted_least_squares;

const PIVOT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct NnlsSolution {
    /// Selected columns, ascending.
    pub support: Vec<usize>,
    /// Strictly positive weights aligned with `support`.
    pub weights: Vec<f64>,
    /// `‖Gξ − b‖ / ‖b‖` on return.
    pub residual: f64,
    /// Relative residual after each outer iteration.
    pub history: Vec<f64>,
    /// The candidate set was exhausted and every column carries weight one.
    pub exhausted: bool,
}

impl NnlsSolution {
    pub fn dense(&self, n: usize) -> DVector<f64> {
        let mut xi = DVector::zeros(n);
        for (&e, &w) in self.support.iter().zip(&self.weights) {
            xi[e] = w;
        }
        xi
    }
}

/// Least squares restricted to the columns in `active`; entries outside stay zero.
fn restricted_solve(g: &DMatrix<f64>, b: &DVector<f64>, active: &[usize]) -> DVector<f64> {
    let ge = g.select_columns(active);
    let ls = pivoted_least_squares(&ge, b, PIVOT_TOL);
    let mut zeta = DVector::zeros(g.ncols());
    for (k, &e) in active.iter().enumerate() {
        zeta[e] = ls.x[k];
    }
    zeta
}

/// Sparse solution of `min ‖Gξ − b‖` subject to `ξ >= 0`.
///
/// Columns enter one at a time by largest positive `μ = Gᵀ(b − Gξ)`, with
/// ties going to the lowest index. At least one outer iteration runs
/// whenever `b ≠ 0`.
pub fn sparse_nnls(g: &DMatrix<f64>, b: &DVector<f64>, tau: f64) -> Result<NnlsSolution> {
    let (rows, n) = g.shape();
    if b.len() != rows {
        return Err(Error::DimensionMismatch {
            what: "NNLS right-hand side",
            expected: rows,
            found: b.len(),
        });
    }
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::Format(format!("tolerance τ = {tau} outside (0, 1]")));
    }
    let bn = b.norm();
    if bn == 0.0 {
        return Ok(NnlsSolution {
            support: Vec::new(),
            weights: Vec::new(),
            residual: 0.0,
            history: Vec::new(),
            exhausted: false,
        });
    }

    let mut xi = DVector::<f64>::zeros(n);
    let mut in_e = vec![false; n];
    let mut active: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    let mut res = b.clone();
    let mut first = true;

    while first || res.norm() > tau * bn {
        first = false;
        if active.len() == n {
            log::warn!("sparse NNLS exhausted all {n} columns; returning unit weights");
            return Ok(NnlsSolution {
                support: (0..n).collect(),
                weights: vec![1.0; n],
                residual: (g * DVector::from_element(n, 1.0) - b).norm() / bn,
                history,
                exhausted: true,
            });
        }
        let mu = g.tr_mul(&res);
        let mut rejected = vec![false; n];
        loop {
            let pick = (0..n).filter(|&k| !in_e[k] && !rejected[k]).fold(
                None,
                |best: Option<usize>, k| match best {
                    Some(b) if mu[b] >= mu[k] => Some(b),
                    _ => Some(k),
                },
            );
            let Some(e) = pick.filter(|&e| mu[e] > 0.0) else {
                return Err(Error::NnlsStall {
                    residual: res.norm() / bn,
                });
            };
            in_e[e] = true;
            active.push(e);
            active.sort_unstable();

            let zeta = restricted_solve(g, b, &active);
            if zeta[e] <= 0.0 {
                // the new column cannot carry positive weight alongside the current set
                in_e[e] = false;
                active.retain(|&k| k != e);
                rejected[e] = true;
                continue;
            }
            let mut zeta = zeta;
            loop {
                if active.iter().all(|&k| zeta[k] > 0.0) {
                    xi = zeta;
                    break;
                }
                let (eta, arg) = active
                    .iter()
                    .filter(|&&k| zeta[k] <= 0.0)
                    .map(|&k| (xi[k] / (xi[k] - zeta[k]), k))
                    .fold((f64::INFINITY, usize::MAX), |acc, v| {
                        if v.0 < acc.0 {
                            v
                        } else {
                            acc
                        }
                    });
                xi += (&zeta - &xi) * eta;
                xi[arg] = 0.0;
                for &k in &active {
                    if xi[k] <= 0.0 {
                        xi[k] = 0.0;
                        in_e[k] = false;
                    }
                }
                active.retain(|&k| in_e[k]);
                zeta = restricted_solve(g, b, &active);
            }
            break;
        }
        res = b - g * &xi;
        history.push(res.norm() / bn);
    }

    Ok(NnlsSolution {
        weights: active.iter().map(|&k| xi[k]).collect(),
        support: active,
        residual: res.norm() / bn,
        history,
        exhausted: false,
    })
}
