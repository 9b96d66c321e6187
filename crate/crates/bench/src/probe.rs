//! Online cost of full and hyper-reduced manifold models across mesh sizes.

use std::fmt::Write as _;
use std::time::Instant;

use anyhow::{Context, Result};
use hyperreduce::hyper::train_reduced;
use hyperreduce::integrator::{JacobianWeights, LinearSolver, SecondOrderSystem};
use hyperreduce::rom::{ReducedModel, ReducedState, Sampling, TermSelection};
use log::info;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::pipeline::{build_mapping, thread_pool, timed, FullRun, Setup};
use crate::scenario::{Scenario, Technique};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeRow {
    pub n_elements: usize,
    pub sampled_elements: usize,
    /// Median time of one unsampled reduced-force evaluation, seconds.
    pub full_force_time: f64,
    /// Median time per step of the unsampled reduced model, seconds.
    pub full_step_time: f64,
    /// Median time per step of the hyper-reduced model, seconds.
    pub hyper_step_time: f64,
    /// Time of one hyper-reduced Newton iteration (residual, Jacobian and
    /// solve), seconds.
    pub hyper_iteration_time: f64,
    /// Mean Newton iterations per step of the hyper-reduced model.
    pub hyper_newton: f64,
    /// Relative deviation of the hyper-reduced from the unsampled reduced
    /// coordinates over the run, percent.
    pub hyper_deviation: f64,
    /// Element DOFs gathered by one hyper-reduced force evaluation.
    pub hyper_gathers: u64,
    pub speedup: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ProbeTable {
    pub rows: Vec<ProbeRow>,
}

impl ProbeTable {
    /// `(full-force ratio, hyper-iteration ratio)` between consecutive rows.
    pub fn ratios(&self) -> Vec<(f64, f64)> {
        self.rows
            .windows(2)
            .map(|w| {
                (
                    w[1].full_force_time / w[0].full_force_time,
                    w[1].hyper_iteration_time / w[0].hyper_iteration_time,
                )
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>8} {:>6} {:>14} {:>14} {:>14} {:>14} {:>7} {:>8} {:>9}",
            "n_e",
            "|E|",
            "force_full(s)",
            "step_full(s)",
            "iter_hyper(s)",
            "step_hyper(s)",
            "newton",
            "gathers",
            "speedup"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>8} {:>6} {:>14.4e} {:>14.4e} {:>14.4e} {:>14.4e} {:>7.2} {:>8} {:>9.1}",
                r.n_elements,
                r.sampled_elements,
                r.full_force_time,
                r.full_step_time,
                r.hyper_iteration_time,
                r.hyper_step_time,
                r.hyper_newton,
                r.hyper_gathers,
                r.speedup
            );
        }
        for (a, b) in self.ratios() {
            let _ = writeln!(s, "ratio  force_full {a:.3}  iter_hyper {b:.3}");
        }
        s
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }
}

/// Length of one timed batch, seconds.
const BATCH: f64 = 0.02;
/// Interleaved timing rounds over all mesh sizes.
const ROUNDS: usize = 60;

/// Calls of `f` needed for a batch of at least `BATCH` seconds.
fn batch_size(f: &mut dyn FnMut() -> Result<()>) -> Result<usize> {
    let mut calls = 1usize;
    loop {
        let start = Instant::now();
        for _ in 0..calls {
            f()?;
        }
        if start.elapsed().as_secs_f64() >= BATCH || calls >= 1 << 20 {
            return Ok(calls);
        }
        calls *= 2;
    }
}

/// Seconds per call of one batch.
fn time_batch(calls: usize, f: &mut dyn FnMut() -> Result<()>) -> Result<f64> {
    let start = Instant::now();
    for _ in 0..calls {
        f()?;
    }
    Ok(start.elapsed().as_secs_f64() / calls as f64)
}

/// Models of one mesh size, ready for timing.
struct Prepared {
    row: ProbeRow,
    full: ReducedModel,
    hyper: ReducedModel,
    states: Vec<ReducedState>,
    weights: JacobianWeights,
}

impl Prepared {
    fn full_force(&self, k: &mut usize) -> Result<()> {
        *k = (*k + 1) % self.states.len();
        self.full.residual(&self.states[*k])?;
        Ok(())
    }

    fn hyper_iteration(&self, k: &mut usize) -> Result<()> {
        *k = (*k + 1) % self.states.len();
        let st = &self.states[*k];
        let (r, factor) = self
            .hyper
            .linearize(&st.q, &st.qdot, &st.qddot, st.t, self.weights)?;
        factor.solve(&r)?;
        Ok(())
    }
}

fn prepare(
    s: &Scenario,
    m: usize,
    terms: TermSelection,
    repetitions: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Prepared> {
    let n_e = s.mesh.elements;
    let setup = Setup::new(s)?;
    let none = FullRun {
        trajectory: Default::default(),
        timing: Default::default(),
    };
    let mapping = build_mapping(&setup, &none, Technique::Qm, m)?;
    let full = ReducedModel::new(setup.structure.clone(), mapping, Sampling::Full, terms)?;
    let (traj, timing) = timed(repetitions, || setup.integrate_reduced(&full))?;
    let steps = setup.n_steps as f64;
    let full_step_time = timing.median() / steps;
    let states: Vec<ReducedState> = (0..traj.len())
        .map(|k| {
            ReducedState::new(
                traj.x[k].clone(),
                traj.v[k].clone(),
                traj.a[k].clone(),
                traj.times[k],
            )
        })
        .collect();
    let trained =
        train_reduced(&full, &states, s.training.n_t, s.training.tau).context("stage probe")?;
    let sampled_elements = trained.mesh.len();
    let hyper = ReducedModel::new(
        setup.structure.clone(),
        full.mapping().clone(),
        Sampling::Full,
        terms,
    )?
    .with_sampling(Sampling::Reduced(trained.mesh))?;

    let (hyper_traj, timing) = timed(repetitions, || setup.integrate_reduced(&hyper))?;
    let hyper_step_time = timing.median() / steps;
    let iterations = &hyper_traj.newton_iterations;
    let hyper_newton = iterations.iter().sum::<usize>() as f64 / iterations.len().max(1) as f64;
    let (num, den) = traj
        .x
        .iter()
        .zip(&hyper_traj.x)
        .fold((0.0, 0.0), |(n, d), (a, b)| {
            (n + (a - b).norm_squared(), d + a.norm_squared())
        });
    let hyper_deviation = if den > 0.0 {
        100.0 * (num / den).sqrt()
    } else {
        0.0
    };

    let scale: Vec<f64> = (0..m)
        .map(|i| {
            states
                .iter()
                .map(|st| st.q[i].abs())
                .fold(0.0, f64::max)
                .max(1e-12)
        })
        .collect();
    let probe_states: Vec<ReducedState> = (0..8)
        .map(|_| {
            let q = DVector::from_fn(m, |i, _| scale[i] * rng.random_range(-1.0..1.0));
            ReducedState::new(q, DVector::zeros(m), DVector::zeros(m), 0.0)
        })
        .collect();
    hyper.reset_gather_count();
    hyper.residual(&probe_states[0])?;
    let hyper_gathers = hyper.gather_count();
    let weights = JacobianWeights {
        acceleration: 1.0,
        velocity: setup.params.gamma * setup.params.dt,
        displacement: setup.params.beta * setup.params.dt.powi(2),
    };
    Ok(Prepared {
        row: ProbeRow {
            n_elements: n_e,
            sampled_elements,
            full_force_time: f64::INFINITY,
            full_step_time,
            hyper_iteration_time: f64::INFINITY,
            hyper_step_time,
            hyper_newton,
            hyper_deviation,
            hyper_gathers,
            speedup: full_step_time / hyper_step_time,
        },
        full,
        hyper,
        states: probe_states,
        weights,
    })
}

/// For each mesh size: trains a hyper-reduced manifold model on states of the
/// unsampled one and times both online. Per-call costs are measured in
/// rounds that cycle through all sizes, keeping the fastest batch of each, so
/// slow phases of the host affect every size alike. Runs on the scenario's
/// thread count.
pub fn scaling_probe(scenario: &Scenario, mesh_sizes: &[usize], seed: u64) -> Result<ProbeTable> {
    anyhow::ensure!(
        mesh_sizes.len() >= 3,
        "the scaling probe needs at least three mesh sizes"
    );
    let m = scenario
        .techniques
        .iter()
        .find(|t| t.kind.is_manifold())
        .map_or(2, |t| t.m);
    let terms = scenario
        .techniques
        .iter()
        .find(|t| t.kind == Technique::EecswQm)
        .map_or(TermSelection::ALL, |t| t.terms);
    let repetitions = scenario.timing.repetitions.max(3);
    let pool = thread_pool(scenario.timing.threads)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pool.install(|| -> Result<ProbeTable> {
        let mut prepared = Vec::with_capacity(mesh_sizes.len());
        for &n_e in mesh_sizes {
            let mut s = scenario.clone();
            s.mesh.elements = n_e;
            let p = prepare(&s, m, terms, repetitions, &mut rng)?;
            info!(
                "probe n_e={n_e}: |E|={} deviation {:.2}% speedup {:.1}",
                p.row.sampled_elements, p.row.hyper_deviation, p.row.speedup
            );
            prepared.push(p);
        }
        let mut k = 0;
        let mut batches = Vec::with_capacity(prepared.len());
        for p in &prepared {
            batches.push((
                batch_size(&mut || p.full_force(&mut k))?,
                batch_size(&mut || p.hyper_iteration(&mut k))?,
            ));
        }
        for _ in 0..ROUNDS {
            for (p, &(full_calls, hyper_calls)) in prepared.iter_mut().zip(&batches) {
                let t = time_batch(full_calls, &mut || p.full_force(&mut k))?;
                p.row.full_force_time = p.row.full_force_time.min(t);
                let t = time_batch(hyper_calls, &mut || p.hyper_iteration(&mut k))?;
                p.row.hyper_iteration_time = p.row.hyper_iteration_time.min(t);
            }
        }
        Ok(ProbeTable {
            rows: prepared.into_iter().map(|p| p.row).collect(),
        })
    })
}
