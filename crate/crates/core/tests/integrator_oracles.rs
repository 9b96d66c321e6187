mod common;

use std::f64::consts::PI;

use common::*;
use hyperreduce::basis::vibration_modes;
use hyperreduce::fe::{LoadCase, LoadFunction, Rayleigh, Structure, VonKarmanFrame};
use hyperreduce::integrator::{energy_audit, integrate, snapshots, NewmarkParams, Trajectory};
use nalgebra::{DMatrix, DVector};

/// Plain dense Newmark/Newton on assembled matrices.
fn dense_newmark(s: &Structure, dt: f64, steps: usize, x0: &DVector<f64>) -> Vec<DVector<f64>> {
    let m = s.mass().to_dense();
    let c = s.damping().to_dense();
    let fext = |t: f64| s.load().external_force(t);
    let fint = |x: &DVector<f64>| s.internal_force(x).unwrap();
    let kt = |x: &DVector<f64>| s.tangent(x).unwrap().to_dense();
    let mut x = x0.clone();
    let mut v = DVector::zeros(x.len());
    let mut a = m
        .clone()
        .lu()
        .solve(&(fext(0.0) + fint(&x) - &c * &v))
        .unwrap();
    let mut out = vec![x.clone()];
    for k in 1..=steps {
        let t = k as f64 * dt;
        let xp = &x + &v * dt + &a * (0.25 * dt * dt);
        let vp = &v + &a * (0.5 * dt);
        let mut r0 = None;
        for _ in 0..30 {
            let xn = &xp + &a * (0.25 * dt * dt);
            let vn = &vp + &a * (0.5 * dt);
            let r = &m * &a + &c * &vn - fint(&xn) - fext(t);
            let r0v = *r0.get_or_insert(r.norm());
            if r.norm() <= 1e-13 * r0v || r.norm() == 0.0 {
                break;
            }
            let j: DMatrix<f64> = &m + &c * (0.5 * dt) + kt(&xn) * (0.25 * dt * dt);
            a -= j.lu().solve(&r).unwrap();
        }
        x = xp + &a * (0.25 * dt * dt);
        v = vp + &a * (0.5 * dt);
        out.push(x.clone());
    }
    out
}

fn max_rel_deviation(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    let scale = b.iter().map(|x| x.norm()).fold(0.0, f64::max);
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
        / scale
}

fn first_period(s: &Structure) -> f64 {
    2.0 * PI
        / vibration_modes(s.mass(), s.stiffness(), 1)
            .unwrap()
            .frequencies[0]
}

#[test]
fn nonlinear_forced_response_matches_dense_oracle() {
    let probe = plate(10, Rayleigh::default(), None);
    let w1 = 2.0 * PI / first_period(&probe);
    let damping = Rayleigh {
        alpha: 0.02 * w1,
        beta: 0.0,
    };
    let s = plate(
        10,
        damping,
        Some((
            4e-4,
            LoadFunction::Sinusoidal {
                amplitude: 1.0,
                omega: w1,
            },
        )),
    );
    let dt = first_period(&s) / 50.0;
    let mut params = NewmarkParams::average_acceleration(dt);
    params.newton_tol = 1e-11;
    let x0 = DVector::zeros(s.n_dofs());
    let traj = integrate(&s, &params, 0.0, 200, &x0, &x0, 1).unwrap();
    let oracle = dense_newmark(&s, dt, 200, &x0);
    let peak = traj
        .x
        .iter()
        .map(|x| x[s.mesh().dof(5, 1).unwrap()].abs())
        .fold(0.0, f64::max);
    assert!(peak > THICKNESS, "response stays linear: peak {peak}");
    let dev = max_rel_deviation(&traj.x, &oracle);
    assert!(dev <= 1e-9, "deviation {dev:e}");
}

#[test]
fn linear_mode_follows_discrete_newmark_frequency() {
    let cfg = strip(20);
    let mesh = cfg.mesh().unwrap();
    let kernel = VonKarmanFrame::linear(&mesh, cfg.section(), Rayleigh::default()).unwrap();
    let n = mesh.n_dofs();
    let s = Structure::new(mesh, kernel, LoadCase::none(n)).unwrap();
    let modes = vibration_modes(s.mass(), s.stiffness(), 1).unwrap();
    let w = modes.frequencies[0];
    let phi = modes.shapes.column(0).into_owned();
    let dt = 2.0 * PI / w / 20.0;
    let wd = 2.0 * (0.5 * w * dt).atan() / dt;
    let traj = integrate(
        &s,
        &NewmarkParams::average_acceleration(dt),
        0.0,
        400,
        &phi,
        &DVector::zeros(n),
        1,
    )
    .unwrap();
    for (t, x) in traj.times.iter().zip(&traj.x) {
        let expected = &phi * (wd * t).cos();
        assert!((x - &expected).norm() <= 1e-8 * phi.norm());
    }
}

#[test]
fn free_vibration_conserves_energy() {
    let s = plate(20, Rayleigh::default(), None);
    let modes = vibration_modes(s.mass(), s.stiffness(), 1).unwrap();
    let phi = modes.shapes.column(0).into_owned();
    let x0 = &phi * (2.0 * THICKNESS / phi.amax());
    let dt = first_period(&s) / 100.0;
    let v0 = DVector::zeros(s.n_dofs());
    let run = |dt: f64, steps: usize| {
        let traj = integrate(
            &s,
            &NewmarkParams::average_acceleration(dt),
            0.0,
            steps,
            &x0,
            &v0,
            1,
        )
        .unwrap();
        energy_audit(&s, &traj, 2.0)
            .unwrap()
            .max_normalized_residual()
    };
    let coarse = run(dt, 300);
    let fine = run(dt / 2.0, 600);
    assert!(coarse < 5e-2, "energy drift {coarse:e}");
    let ratio = coarse / fine;
    assert!((3.0..=5.0).contains(&ratio), "refinement ratio {ratio}");
}

#[test]
fn damped_forced_balance_closes() {
    let probe = plate(20, Rayleigh::default(), None);
    let w1 = 2.0 * PI / first_period(&probe);
    let s = plate(
        20,
        Rayleigh {
            alpha: 0.05 * w1,
            beta: 0.0,
        },
        Some((
            2e-4,
            LoadFunction::Sinusoidal {
                amplitude: 1.0,
                omega: w1,
            },
        )),
    );
    let x0 = DVector::zeros(s.n_dofs());
    let run = |dt: f64, steps: usize| {
        let traj = integrate(
            &s,
            &NewmarkParams::average_acceleration(dt),
            0.0,
            steps,
            &x0,
            &x0,
            1,
        )
        .unwrap();
        let ledger = energy_audit(&s, &traj, 2.0).unwrap();
        assert!(ledger.dissipated_work.last().unwrap() > &0.0);
        ledger.max_normalized_residual()
    };
    let dt = first_period(&s) / 100.0;
    let coarse = run(dt, 500);
    let fine = run(dt / 2.0, 1000);
    assert!(coarse < 1e-2, "balance residual {coarse:e}");
    let ratio = coarse / fine;
    assert!((3.0..=5.0).contains(&ratio), "refinement ratio {ratio}");
}

#[test]
fn zero_load_from_rest_stays_at_rest() {
    let s = plate(
        10,
        Rayleigh {
            alpha: 1.0,
            beta: 1e-5,
        },
        Some((
            0.0,
            LoadFunction::Sinusoidal {
                amplitude: 1.0,
                omega: 100.0,
            },
        )),
    );
    let z = DVector::zeros(s.n_dofs());
    let traj = integrate(
        &s,
        &NewmarkParams::average_acceleration(1e-4),
        0.0,
        50,
        &z,
        &z,
        10,
    )
    .unwrap();
    assert!(traj
        .x
        .iter()
        .chain(&traj.v)
        .chain(&traj.a)
        .all(|x| x.iter().all(|&c| c == 0.0)));
    assert_eq!(traj.len(), 6);
}

#[test]
fn snapshot_file_roundtrip() {
    let s = plate(
        6,
        Rayleigh::default(),
        Some((1e-4, LoadFunction::Constant { amplitude: 1.0 })),
    );
    let z = DVector::zeros(s.n_dofs());
    let traj: Trajectory = integrate(
        &s,
        &NewmarkParams::average_acceleration(1e-4),
        0.0,
        20,
        &z,
        &z,
        3,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("snap.bin");
    snapshots::write(&path, &traj).unwrap();
    let back = snapshots::read(&path).unwrap();
    assert_eq!(back.times, traj.times);
    assert_eq!(back.x, traj.x);
    assert_eq!(back.a, traj.a);
}
