//! Least squares by Householder QR with column-norm pivoting.

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Debug)]
pub struct LeastSquares {
    pub x: DVector<f64>,
    /// Number of pivots above the tolerance.
    pub rank: usize,
    /// `|R₀₀| / |R_kk|` for the last accepted pivot `k`.
    pub condition: f64,
}

/// Basic solution of `min ‖A x − b‖₂`. Pivots with `|R_kk| <= rel_tol · ‖A‖_F`
/// end the factorization; the corresponding unknowns are set to zero.
pub fn pivoted_least_squares(a: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> LeastSquares {
    let (rows, cols) = a.shape();
    assert_eq!(rows, b.len(), "right-hand side length");
    let mut r = a.clone();
    let mut qtb = b.clone();
    let mut perm: Vec<usize> = (0..cols).collect();
    let tol = rel_tol * a.norm();
    let mut rank = 0;
    for k in 0..rows.min(cols) {
        let mut j = k;
        let mut best = f64::NEG_INFINITY;
        for c in k..cols {
            let nc = r.column(c).rows(k, rows - k).norm_squared();
            if nc > best {
                best = nc;
                j = c;
            }
        }
        let col_norm = best.sqrt();
        if !(col_norm > tol) {
            break;
        }
        r.swap_columns(k, j);
        perm.swap(k, j);

        let x0 = r[(k, k)];
        let alpha = if x0 >= 0.0 { -col_norm } else { col_norm };
        let mut v = r.column(k).rows(k, rows - k).clone_owned();
        v[0] -= alpha;
        let vtv = v.norm_squared();
        if vtv > 0.0 {
            for c in k + 1..cols {
                let mut col = r.column_mut(c);
                let mut col = col.rows_mut(k, rows - k);
                let s = 2.0 * v.dot(&col) / vtv;
                col.axpy(-s, &v, 1.0);
            }
            let mut tail = qtb.rows_mut(k, rows - k);
            let s = 2.0 * v.dot(&tail) / vtv;
            tail.axpy(-s, &v, 1.0);
        }
        r[(k, k)] = alpha;
        for i in k + 1..rows {
            r[(i, k)] = 0.0;
        }
        rank = k + 1;
    }

    let mut z = DVector::zeros(rank);
    for i in (0..rank).rev() {
        let mut s = qtb[i];
        for c in i + 1..rank {
            s -= r[(i, c)] * z[c];
        }
        z[i] = s / r[(i, i)];
    }
    let mut x = DVector::zeros(cols);
    for (i, &p) in perm.iter().take(rank).enumerate() {
        x[p] = z[i];
    }
    let condition = if rank == 0 {
        f64::INFINITY
    } else {
        r[(0, 0)].abs() / r[(rank - 1, rank - 1)].abs()
    };
    LeastSquares { x, rank, condition }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_pseudo_inverse_on_tall_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (rows, cols) in [(5, 3), (12, 7), (4, 4), (30, 1)] {
            let a = DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0));
            let b = DVector::from_fn(rows, |_, _| rng.random_range(-1.0..1.0));
            let ls = pivoted_least_squares(&a, &b, 1e-12);
            let oracle = a.clone().pseudo_inverse(1e-14).unwrap() * &b;
            assert_eq!(ls.rank, cols);
            assert!((ls.x - &oracle).norm() <= 1e-12 * oracle.norm());
        }
    }

    #[test]
    fn rank_deficient_gives_minimal_residual_basic_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let base = DMatrix::from_fn(8, 2, |_, _| rng.random_range(-1.0..1.0));
        // third column is a combination of the first two
        let mut a = DMatrix::zeros(8, 3);
        a.set_column(0, &base.column(0));
        a.set_column(1, &base.column(1));
        a.set_column(2, &(base.column(0) * 2.0 - base.column(1)));
        let b = DVector::from_fn(8, |_, _| rng.random_range(-1.0..1.0));
        let ls = pivoted_least_squares(&a, &b, 1e-12);
        assert_eq!(ls.rank, 2);
        assert_eq!(ls.x.iter().filter(|v| **v == 0.0).count(), 1);
        let oracle = &a * (a.clone().pseudo_inverse(1e-12).unwrap() * &b);
        assert!(((&a * &ls.x - &b).norm() - (oracle - &b).norm()).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        let ls =
            pivoted_least_squares(&DMatrix::zeros(3, 2), &DVector::from_element(3, 1.0), 1e-12);
        assert_eq!(ls.rank, 0);
        assert_eq!(ls.x, DVector::zeros(2));
    }
}
