mod common;

use common::*;
use hyperreduce::basis::{
    pair_index, pod_basis, quadratic_manifold, static_modal_derivatives, vibration_modes, Mapping,
};
use hyperreduce::fe::{LoadCase, Rayleigh, Structure, VonKarmanFrame};
use hyperreduce::Error;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

#[test]
fn pod_recovers_a_planted_subspace() {
    let mut r = rng(3);
    let (n, ns) = (40, 25);
    let basis = DMatrix::from_fn(n, 3, |_, _| r.random_range(-1.0..1.0))
        .qr()
        .q();
    let weights = DMatrix::from_diagonal(&DVector::from_vec(vec![5.0, 2.0, 0.5]));
    let coeffs = DMatrix::from_fn(3, ns, |_, _| r.random_range(-1.0..1.0));
    let snaps = &basis * weights * coeffs;
    let pod = pod_basis(&snaps, 3).unwrap();
    let v = pod.basis.matrix();
    assert!((v.transpose() * v - DMatrix::identity(3, 3)).norm() < 1e-12);
    let residual = &snaps - v * (v.transpose() * &snaps);
    assert!(residual.norm() < 1e-12 * snaps.norm());
    assert!(pod.singular_values.windows(2).all(|w| w[0] >= w[1]));
    let svd = snaps.clone().svd(false, false);
    let mut oracle: Vec<f64> = svd.singular_values.iter().copied().collect();
    oracle.sort_by(|a, b| b.total_cmp(a));
    for (a, b) in pod.singular_values.iter().zip(&oracle) {
        assert!((a - b).abs() <= 1e-12 * oracle[0]);
    }
    for k in 0..3 {
        let col = v.column(k);
        assert!(col[col.iamax()] > 0.0);
    }
    assert!(matches!(
        pod_basis(&snaps, 4),
        Err(Error::RankDeficient {
            rank: 3,
            required: 4
        })
    ));
}

#[test]
fn linear_kernel_has_vanishing_modal_derivatives() {
    let cfg = strip(12);
    let mesh = cfg.mesh().unwrap();
    let kernel = VonKarmanFrame::linear(&mesh, cfg.section(), Rayleigh::default()).unwrap();
    let n = mesh.n_dofs();
    let s = Structure::new(mesh, kernel, LoadCase::none(n)).unwrap();
    let modes = vibration_modes(s.mass(), s.stiffness(), 3).unwrap();
    let omega = static_modal_derivatives(&s, &modes.shapes).unwrap();
    assert!(omega.norm() <= 1e-10 * modes.shapes.norm());
}

#[test]
fn modal_derivative_matches_second_difference_of_force() {
    let s = plate(12, Rayleigh::default(), None);
    let modes = vibration_modes(s.mass(), s.stiffness(), 2).unwrap();
    let omega = static_modal_derivatives(&s, &modes.shapes).unwrap();
    let k0 = s.stiffness().to_dense().lu();
    for i in 0..2 {
        let phi = modes.shapes.column(i).into_owned();
        let h = 1e-2 * THICKNESS / phi.amax();
        let f2 = (s.internal_force(&(&phi * h)).unwrap()
            - s.internal_force(&DVector::zeros(s.n_dofs())).unwrap() * 2.0
            + s.internal_force(&(&phi * -h)).unwrap())
            / (h * h);
        let theta = k0.solve(&f2).unwrap();
        let got = omega.column(pair_index(2, i, i)).into_owned();
        assert!(
            rel(&got, &theta) < 1e-5,
            "θ_{i}{i} error {:e}",
            rel(&got, &theta)
        );
    }
}

#[test]
fn bending_mode_derivatives_are_membrane_dominated() {
    let s = plate(20, Rayleigh::default(), None);
    let modes = vibration_modes(s.mass(), s.stiffness(), 2).unwrap();
    let omega = static_modal_derivatives(&s, &modes.shapes).unwrap();
    let axial = s.mesh().dofs_of_kind(0);
    let theta = omega.column(pair_index(2, 0, 0));
    let axial_norm2: f64 = axial.iter().map(|&d| theta[d] * theta[d]).sum();
    assert!(axial_norm2 / theta.norm_squared() > 0.9);
}

#[test]
fn manifold_tangent_matches_finite_differences() {
    let s = plate(12, Rayleigh::default(), None);
    let modes = vibration_modes(s.mass(), s.stiffness(), 3).unwrap();
    let mapping = Mapping::Quadratic(quadratic_manifold(&s, &modes.shapes).unwrap());
    let mut r = rng(8);
    for _ in 0..50 {
        let q = DVector::from_fn(3, |_, _| r.random_range(-1.0..1.0) * 1e3);
        let p = mapping.tangent(&q).unwrap();
        let mut fd = DMatrix::zeros(mapping.n(), 3);
        for j in 0..3 {
            let h = 1e-3 * (1.0 + q[j].abs());
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[j] += h;
            qm[j] -= h;
            fd.set_column(
                j,
                &((mapping.eval(&qp).unwrap() - mapping.eval(&qm).unwrap()) / (2.0 * h)),
            );
        }
        assert!((&p - &fd).norm() <= 1e-5 * p.norm());
    }
}
