//! Static modal derivatives by directional differencing of the tangent.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::basis::mapping::{pair_count, pair_index, QuadraticManifold};
use crate::error::Result;
use crate::fe::skyline::SkylineLdl;
use crate::fe::structure::Structure;

/// Relative agreement required between successive step halvings.
const HALVING_TOL: f64 = 1e-6;
const MAX_HALVINGS: usize = 6;

/// `[dK(εφ_j)/dε]_{ε=0} φ_i` for all `i`, by central differences.
fn directional_tangent_products(
    structure: &Structure,
    modes: &DMatrix<f64>,
    j: usize,
    step: f64,
) -> Result<Vec<DVector<f64>>> {
    let dir = modes.column(j).into_owned();
    let kp = structure.tangent(&(&dir * step))?;
    let km = structure.tangent(&(&dir * -step))?;
    Ok((0..modes.ncols())
        .map(|i| {
            let phi_i = modes.column(i).into_owned();
            (kp.mul_vec(&phi_i) - km.mul_vec(&phi_i)) / (2.0 * step)
        })
        .collect())
}

/// Packed `Ω` (`n × m(m+1)/2`) with `Ω_ij = ½(θ_ij + θ_ji)` and
/// `θ_ij = -K₀⁻¹ [dK(εφ_j)/dε] φ_i`.
pub fn static_modal_derivatives(
    structure: &Structure,
    modes: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let n = structure.n_dofs();
    let m = modes.ncols();
    let k0 = SkylineLdl::factor(structure.stiffness())?;
    let char_len = structure.mesh().characteristic_length();

    let columns: Vec<Vec<DVector<f64>>> = (0..m)
        .into_par_iter()
        .map(|j| -> Result<Vec<DVector<f64>>> {
            let amax = modes.column(j).amax().max(f64::MIN_POSITIVE);
            let mut step = 1e-4 * char_len / amax;
            let mut prev = directional_tangent_products(structure, modes, j, step)?;
            for _ in 0..MAX_HALVINGS {
                step *= 0.5;
                let next = directional_tangent_products(structure, modes, j, step)?;
                let agree = prev.iter().zip(&next).all(|(a, b)| {
                    (a - b).norm() <= HALVING_TOL * b.norm().max(a.norm()) || b.norm() == 0.0
                });
                prev = next;
                if agree {
                    break;
                }
            }
            Ok(prev.into_iter().map(|rhs| -k0.solve(&rhs)).collect())
        })
        .collect::<Result<_>>()?;

    let mut omega = DMatrix::zeros(n, pair_count(m));
    for i in 0..m {
        for j in i..m {
            // columns[j][i] = θ_ij
            let sym = (&columns[j][i] + &columns[i][j]) * 0.5;
            omega.set_column(pair_index(m, i, j), &sym);
        }
    }
    Ok(omega)
}

/// Quadratic manifold from vibration modes and their static derivatives.
pub fn quadratic_manifold(
    structure: &Structure,
    modes: &DMatrix<f64>,
) -> Result<QuadraticManifold> {
    let omega = static_modal_derivatives(structure, modes)?;
    QuadraticManifold::new(modes.clone(), omega)
}
