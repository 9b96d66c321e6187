use nalgebra::DMatrix;

use crate::basis::mapping::LinearBasis;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Pod {
    pub basis: LinearBasis,
    /// All singular values of the snapshot matrix, descending.
    pub singular_values: Vec<f64>,
}

/// Leading `m` left singular vectors of the snapshot matrix (one snapshot per column).
pub fn pod_basis(snapshots: &DMatrix<f64>, m: usize) -> Result<Pod> {
    let (n, ns) = snapshots.shape();
    if ns < m || n < m {
        return Err(Error::RankDeficient {
            rank: ns.min(n),
            required: m,
        });
    }
    let svd = snapshots.clone().svd(true, false);
    let u = svd.u.as_ref().expect("left vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sigma: Vec<f64> = order.iter().map(|&k| svd.singular_values[k]).collect();
    let tol = sigma.first().copied().unwrap_or(0.0) * n.max(ns) as f64 * f64::EPSILON;
    let rank = sigma.iter().filter(|&&s| s > tol).count();
    if rank < m {
        return Err(Error::RankDeficient { rank, required: m });
    }
    let mut v = DMatrix::from_fn(n, m, |i, k| u[(i, order[k])]);
    for k in 0..m {
        let mut col = v.column_mut(k);
        let imax = col.iamax();
        if col[imax] < 0.0 {
            col.neg_mut();
        }
    }
    Ok(Pod {
        basis: LinearBasis::new(v)?,
        singular_values: sigma,
    })
}
