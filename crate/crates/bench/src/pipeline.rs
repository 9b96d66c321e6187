//! End-to-end runs: full model, bases, training, reduced simulations.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{Context, Result};
use hyperreduce::basis::{pod_basis, quadratic_manifold, vibration_modes, LinearBasis, Mapping};
use hyperreduce::fe::Structure;
use hyperreduce::hyper::{train, ReducedMesh, Snapshots, Trained};
use hyperreduce::integrator::{integrate, snapshots, NewmarkParams, Trajectory};
use hyperreduce::rom::{ReducedModel, Sampling, TermSelection};
use log::{info, warn};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::gre::gre_m;
use crate::report::{BenchReport, ReportRow};
use crate::scenario::{Scenario, Technique, TechniqueSpec};

/// Wall-clock samples of repeated runs, in seconds.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub samples: Vec<f64>,
}

impl Timing {
    pub fn median(&self) -> f64 {
        let mut s = self.samples.clone();
        s.sort_by(f64::total_cmp);
        match s.len() {
            0 => f64::NAN,
            n if n % 2 == 1 => s[n / 2],
            n => 0.5 * (s[n / 2 - 1] + s[n / 2]),
        }
    }
}

/// Times `run` `repetitions` times and keeps the first result.
pub fn timed<T>(repetitions: usize, mut run: impl FnMut() -> Result<T>) -> Result<(T, Timing)> {
    let mut first = None;
    let mut timing = Timing::default();
    for _ in 0..repetitions.max(1) {
        let start = Instant::now();
        let out = run()?;
        timing.samples.push(start.elapsed().as_secs_f64());
        first.get_or_insert(out);
    }
    Ok((first.expect("at least one repetition"), timing))
}

/// Structure, natural frequencies and time grid of a scenario.
pub struct Setup {
    pub scenario: Scenario,
    pub frequencies: Vec<f64>,
    /// Mass-normalized vibration modes, as many as any technique needs.
    pub modes: DMatrix<f64>,
    pub structure: Arc<Structure>,
    pub params: NewmarkParams,
    pub n_steps: usize,
}

impl Setup {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        let free = Structure::from_config(&scenario.free_config()).context("stage mesh")?;
        let count = scenario.modes_needed().min(free.n_dofs());
        let modes = vibration_modes(free.mass(), free.stiffness(), count).context("stage modes")?;
        let structure = Arc::new(
            Structure::from_config(&scenario.structure_config(&modes.frequencies))
                .context("stage mesh")?,
        );
        let period = 2.0 * std::f64::consts::PI / modes.frequencies[0];
        let dt = period / scenario.time.steps_per_period as f64;
        let n_steps =
            (scenario.time.periods * scenario.time.steps_per_period as f64).round() as usize;
        Ok(Self {
            scenario: scenario.clone(),
            frequencies: modes.frequencies,
            modes: modes.shapes,
            structure,
            params: NewmarkParams::average_acceleration(dt),
            n_steps,
        })
    }

    pub fn dt(&self) -> f64 {
        self.params.dt
    }

    pub fn integrate_full(&self) -> Result<Trajectory> {
        let z = DVector::zeros(self.structure.n_dofs());
        integrate(&*self.structure, &self.params, 0.0, self.n_steps, &z, &z, 1)
            .context("stage simulate")
    }

    pub fn integrate_reduced(&self, model: &ReducedModel) -> Result<Trajectory> {
        let z = DVector::zeros(model.dim());
        integrate(model, &self.params, 0.0, self.n_steps, &z, &z, 1).context("stage reduce")
    }

    /// First `m` vibration modes, computing more if needed.
    pub fn vibration_basis(&self, m: usize) -> Result<DMatrix<f64>> {
        if m <= self.modes.ncols() {
            return Ok(self.modes.columns(0, m).into_owned());
        }
        let s = &self.structure;
        Ok(vibration_modes(s.mass(), s.stiffness(), m)
            .context("stage basis")?
            .shapes)
    }
}

#[derive(Clone, Debug)]
pub struct FullRun {
    pub trajectory: Trajectory,
    pub timing: Timing,
}

impl FullRun {
    pub fn is_trivial(&self) -> bool {
        self.trajectory
            .x
            .iter()
            .all(|x| x.iter().all(|&c| c == 0.0))
    }

    pub fn snapshots(&self) -> Snapshots<'_> {
        Snapshots {
            times: &self.trajectory.times,
            u: &self.trajectory.x,
            v: &self.trajectory.v,
            a: &self.trajectory.a,
        }
    }
}

pub fn run_full(setup: &Setup) -> Result<FullRun> {
    let (trajectory, timing) = timed(setup.scenario.timing.repetitions, || setup.integrate_full())?;
    info!(
        "full model: {} steps, median {:.3} s",
        setup.n_steps,
        timing.median()
    );
    Ok(FullRun { trajectory, timing })
}

const CACHE_TRAJECTORY: &str = "hfm.bin";
const CACHE_META: &str = "hfm.toml";

#[derive(Serialize, Deserialize)]
struct CacheMeta {
    key: String,
    timing: Timing,
}

fn cache_key(s: &Scenario) -> String {
    let relevant = Scenario {
        name: String::new(),
        techniques: Vec::new(),
        training: Default::default(),
        ..s.clone()
    };
    relevant.to_toml_string()
}

/// Full run read from `dir` when it was produced by an identical scenario,
/// otherwise computed and stored there.
pub fn run_full_cached(setup: &Setup, dir: &Path) -> Result<FullRun> {
    let key = cache_key(&setup.scenario);
    let meta_path = dir.join(CACHE_META);
    if let Ok(text) = std::fs::read_to_string(&meta_path) {
        if let Ok(meta) = toml::from_str::<CacheMeta>(&text) {
            if meta.key == key {
                if let Ok(trajectory) = snapshots::read(dir.join(CACHE_TRAJECTORY)) {
                    info!("reusing cached full run from {}", dir.display());
                    return Ok(FullRun {
                        trajectory,
                        timing: meta.timing,
                    });
                }
            }
        }
    }
    let run = run_full(setup)?;
    std::fs::create_dir_all(dir)?;
    snapshots::write(dir.join(CACHE_TRAJECTORY), &run.trajectory)?;
    let meta = CacheMeta {
        key,
        timing: run.timing.clone(),
    };
    std::fs::write(meta_path, toml::to_string(&meta)?)?;
    Ok(run)
}

/// Reduction mapping of a technique: POD of the full-run displacements for
/// linear techniques, vibration modes with static derivatives otherwise.
pub fn build_mapping(
    setup: &Setup,
    full: &FullRun,
    technique: Technique,
    m: usize,
) -> Result<Mapping> {
    if technique.is_manifold() {
        let modes = setup.vibration_basis(m)?;
        return Ok(Mapping::Quadratic(
            quadratic_manifold(&setup.structure, &modes).context("stage basis")?,
        ));
    }
    if full.is_trivial() {
        warn!("full run is identically zero; using vibration modes in place of POD");
        return Ok(Mapping::Linear(LinearBasis::new(
            setup.vibration_basis(m)?,
        )?));
    }
    let x = &full.trajectory.x;
    let snaps = DMatrix::from_fn(setup.structure.n_dofs(), x.len(), |i, k| x[k][i]);
    Ok(Mapping::Linear(
        pod_basis(&snaps, m).context("stage basis")?.basis,
    ))
}

/// Trains a reduced mesh for `mapping` on the full-run snapshots.
pub fn train_mesh(
    setup: &Setup,
    full: &FullRun,
    mapping: &Mapping,
    terms: TermSelection,
) -> Result<Trained> {
    let model = ReducedModel::new(
        setup.structure.clone(),
        mapping.clone(),
        Sampling::Full,
        terms,
    )?;
    let t = &setup.scenario.training;
    let trained = train(&model, full.snapshots(), t.n_t, t.tau).context("stage train")?;
    info!(
        "trained {} of {} elements, residual {:.3e}",
        trained.mesh.len(),
        trained.mesh.n_elements,
        trained.mesh.residual
    );
    Ok(trained)
}

#[derive(Clone, Debug)]
pub struct ReducedRun {
    pub spec: TechniqueSpec,
    pub mapping: Mapping,
    pub mesh: Option<ReducedMesh>,
    pub nnls_residual: Option<f64>,
    pub trajectory: Trajectory,
    pub lifted: Vec<DVector<f64>>,
    pub timing: Timing,
    pub gre_m: f64,
    /// Element DOFs gathered per Newton evaluation.
    pub gathers_per_evaluation: f64,
}

impl ReducedRun {
    pub fn elements(&self, n_elements: usize) -> usize {
        self.mesh.as_ref().map_or(n_elements, |m| m.len())
    }
}

/// GRE_M with the zero-reference case resolved: identical zero records
/// agree perfectly.
pub fn gre_or_trivial(full: &FullRun, lifted: &[DVector<f64>], setup: &Setup) -> Result<f64> {
    match gre_m(&full.trajectory.x, lifted, setup.structure.mass()) {
        Err(hyperreduce::Error::ZeroReference)
            if lifted.iter().all(|x| x.iter().all(|&c| c == 0.0)) =>
        {
            Ok(0.0)
        }
        other => Ok(other.context("stage report")?),
    }
}

/// Builds, trains (for hyper-reduced techniques) and runs one technique.
pub fn run_technique(setup: &Setup, full: &FullRun, spec: &TechniqueSpec) -> Result<ReducedRun> {
    let mapping = build_mapping(setup, full, spec.kind, spec.m)?;
    run_with_mapping(setup, full, spec, mapping)
}

pub fn run_with_mapping(
    setup: &Setup,
    full: &FullRun,
    spec: &TechniqueSpec,
    mapping: Mapping,
) -> Result<ReducedRun> {
    let mut model = ReducedModel::new(
        setup.structure.clone(),
        mapping.clone(),
        Sampling::Full,
        spec.terms,
    )?;
    let (mut mesh, mut nnls_residual) = (None, None);
    if spec.kind.is_hyper() {
        if full.is_trivial() {
            warn!(
                "{}: full run is identically zero; keeping every element",
                spec.kind
            );
        } else {
            let trained = train_mesh(setup, full, &mapping, spec.terms)?;
            nnls_residual = Some(trained.nnls.residual);
            model = model.with_sampling(Sampling::Reduced(trained.mesh.clone()))?;
            mesh = Some(trained.mesh);
        }
    }
    run_model(setup, full, spec, model, mesh, nnls_residual)
}

pub fn run_model(
    setup: &Setup,
    full: &FullRun,
    spec: &TechniqueSpec,
    model: ReducedModel,
    mesh: Option<ReducedMesh>,
    nnls_residual: Option<f64>,
) -> Result<ReducedRun> {
    let (trajectory, timing) = timed(setup.scenario.timing.repetitions, || {
        model.reset_gather_count();
        setup.integrate_reduced(&model)
    })?;
    let evaluations: usize = trajectory
        .newton_iterations
        .iter()
        .map(|&k| k + 1)
        .sum::<usize>()
        + 1;
    let gathers_per_evaluation = model.gather_count() as f64 / evaluations as f64;
    let lifted = trajectory
        .x
        .iter()
        .map(|q| model.mapping().eval(q))
        .collect::<hyperreduce::Result<Vec<_>>>()?;
    let gre = gre_or_trivial(full, &lifted, setup)?;
    info!(
        "{} m={}: GRE_M {gre:.3}%, median {:.4} s",
        spec.kind,
        spec.m,
        timing.median()
    );
    Ok(ReducedRun {
        spec: spec.clone(),
        mapping: model.mapping().clone(),
        mesh,
        nnls_residual,
        trajectory,
        lifted,
        timing,
        gre_m: gre,
        gathers_per_evaluation,
    })
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub threads: Option<usize>,
    pub tau: Option<f64>,
    pub n_t: Option<usize>,
    pub only: Option<Technique>,
    pub cache_dir: Option<std::path::PathBuf>,
}

impl RunOptions {
    pub fn apply(&self, scenario: &Scenario) -> Result<Scenario> {
        let mut s = scenario.clone();
        if let Some(t) = self.threads {
            s.timing.threads = t;
        }
        if let Some(tau) = self.tau {
            s.training.tau = tau;
        }
        if let Some(n_t) = self.n_t {
            s.training.n_t = n_t;
        }
        if let Some(only) = self.only {
            s.techniques.retain(|t| t.kind == only);
            anyhow::ensure!(
                !s.techniques.is_empty(),
                "scenario `{}` has no {only} technique",
                s.name
            );
        }
        s.validate()?;
        Ok(s)
    }
}

pub struct Outcome {
    pub setup: Setup,
    pub full: FullRun,
    pub runs: Vec<ReducedRun>,
    pub report: BenchReport,
}

pub fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()?)
}

/// Full pipeline: one full run, then every technique of the scenario.
pub fn run_scenario(scenario: &Scenario, options: &RunOptions) -> Result<Outcome> {
    let scenario = options.apply(scenario)?;
    let pool = thread_pool(scenario.timing.threads)?;
    pool.install(|| {
        let setup = Setup::new(&scenario)?;
        let full = match &options.cache_dir {
            Some(dir) => run_full_cached(&setup, dir)?,
            None => run_full(&setup)?,
        };
        let runs = scenario
            .techniques
            .iter()
            .map(|spec| {
                run_technique(&setup, &full, spec)
                    .with_context(|| format!("technique {}", spec.kind))
            })
            .collect::<Result<Vec<_>>>()?;
        let report = BenchReport::new(&setup, &full, &runs);
        Ok(Outcome {
            setup,
            full,
            runs,
            report,
        })
    })
}

impl BenchReport {
    pub fn new(setup: &Setup, full: &FullRun, runs: &[ReducedRun]) -> Self {
        let s = &setup.scenario;
        let n_e = setup.structure.n_elements();
        let t_full = full.timing.median();
        let mut rows = vec![ReportRow {
            technique: "HFM".into(),
            m: setup.structure.n_dofs(),
            elements: n_e,
            gre_m: 0.0,
            t_sim: t_full,
            speedup: 1.0,
            nnls_residual: None,
        }];
        rows.extend(runs.iter().map(|r| {
            let t_sim = r.timing.median();
            ReportRow {
                technique: r.spec.label(),
                m: r.spec.m,
                elements: r.elements(n_e),
                gre_m: r.gre_m,
                t_sim,
                speedup: t_full / t_sim,
                nnls_residual: r.nnls_residual,
            }
        }));
        BenchReport {
            scenario: s.name.clone(),
            n_dofs: setup.structure.n_dofs(),
            n_elements: n_e,
            dt: setup.dt(),
            n_steps: setup.n_steps,
            first_frequency: setup.frequencies[0],
            tau: s.training.tau,
            n_t: s.training.n_t,
            threads: s.timing.threads,
            repetitions: s.timing.repetitions,
            version: env!("CARGO_PKG_VERSION").to_string(),
            rows,
        }
    }
}
