//! Reduced coordinates of full-order snapshots.

use nalgebra::{DMatrix, DVector};

use crate::basis::mapping::Mapping;
use crate::error::{Error, Result};
use crate::hyper::lstsq::pivoted_least_squares;

const MAX_ITERATIONS: usize = 200;
const GRADIENT_TOL: f64 = 1e-10;
const STEP_TOL: f64 = 1e-12;
const RANK_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct Recovered {
    pub q: DVector<f64>,
    /// `‖Γ(q) − u‖ / ‖u‖` (absolute when `u = 0`).
    pub residual: f64,
    pub iterations: usize,
}

fn solve_tangent(p: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let ls = pivoted_least_squares(p, rhs, RANK_TOL);
    if ls.rank < p.ncols() {
        return Err(Error::IllConditioned {
            condition: ls.condition,
        });
    }
    Ok(ls.x)
}

fn relative(r: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        r / scale
    } else {
        r
    }
}

/// `argmin_q ‖Γ(q) − u‖₂` by Levenberg–Marquardt from the linear projection.
///
/// Stops when `‖Jᵀr‖ <= 1e-10 ‖J‖_F ‖u‖` or an accepted step satisfies
/// `‖δ‖ <= 1e-12 (1 + ‖q‖)`.
pub fn recover_q(mapping: &Mapping, u: &DVector<f64>) -> Result<Recovered> {
    if u.len() != mapping.n() {
        return Err(Error::DimensionMismatch {
            what: "snapshot",
            expected: mapping.n(),
            found: u.len(),
        });
    }
    let un = u.norm();
    let mut q = solve_tangent(mapping.linear_part(), u)?;
    if mapping.is_linear() {
        let residual = relative((mapping.eval(&q)? - u).norm(), un);
        return Ok(Recovered {
            q,
            residual,
            iterations: 0,
        });
    }

    let m = mapping.dim();
    let mut r = mapping.eval(&q)? - u;
    let mut cost = r.norm_squared();
    let mut j = mapping.tangent(&q)?;
    let mut jtj = j.tr_mul(&j);
    let mut lambda = 1e-6 * jtj.trace() / m as f64;
    for it in 0..MAX_ITERATIONS {
        let g = j.tr_mul(&r);
        if g.norm() <= GRADIENT_TOL * j.norm() * un {
            return Ok(Recovered {
                q,
                residual: relative(cost.sqrt(), un),
                iterations: it,
            });
        }
        let mut a = jtj.clone();
        for d in 0..m {
            a[(d, d)] += lambda;
        }
        let Some(chol) = a.cholesky() else {
            lambda *= 10.0;
            continue;
        };
        let delta = -chol.solve(&g);
        let trial = &q + &delta;
        let r_trial = mapping.eval(&trial)? - u;
        let cost_trial = r_trial.norm_squared();
        let small_step = delta.norm() <= STEP_TOL * (1.0 + q.norm());
        if cost_trial < cost {
            q = trial;
            r = r_trial;
            cost = cost_trial;
            j = mapping.tangent(&q)?;
            jtj = j.tr_mul(&j);
            lambda /= 10.0;
        } else {
            lambda *= 10.0;
        }
        if small_step {
            return Ok(Recovered {
                q,
                residual: relative(cost.sqrt(), un),
                iterations: it + 1,
            });
        }
    }
    Err(Error::RecoveryFailed {
        iterations: MAX_ITERATIONS,
        residual: relative(cost.sqrt(), un),
        best: q,
    })
}

/// `q̇ = argmin ‖P_Γ(q) q̇ − u̇‖`.
pub fn recover_qdot(
    mapping: &Mapping,
    q: &DVector<f64>,
    udot: &DVector<f64>,
) -> Result<DVector<f64>> {
    solve_tangent(&mapping.tangent(q)?, udot)
}

/// `q̈ = argmin ‖P_Γ(q) q̈ − (ü − Ω:(q̇⊗q̇))‖`.
pub fn recover_qddot(
    mapping: &Mapping,
    q: &DVector<f64>,
    qdot: &DVector<f64>,
    uddot: &DVector<f64>,
) -> Result<DVector<f64>> {
    let rhs = uddot - mapping.curvature(qdot)?;
    solve_tangent(&mapping.tangent(q)?, &rhs)
}
