use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use hyperreduce::basis::container;
use hyperreduce::fe::mtx;
use hyperreduce::hyper::ReducedMesh;
use hyperreduce::rom::{ReducedModel, Sampling};
use hyperreduce_bench::output::{coordinate_columns, monitor_dofs, write_trajectory_csv};
use hyperreduce_bench::pipeline::{
    build_mapping, run_full_cached, run_model, thread_pool, train_mesh, FullRun, Setup,
};
use hyperreduce_bench::{
    run_scenario, scaling_probe, RunOptions, Scenario, Technique, TechniqueSpec,
};

#[derive(Parser)]
#[command(
    name = "hyperreduce",
    version,
    about = "Reduced and hyper-reduced structural dynamics benchmarks"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long, global = true, default_value = "configs/desk_plate.toml")]
    config: PathBuf,
    /// Output directory for artifacts and reports.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; also the thread count used for timings.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed of the random states drawn by the scaling probe.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// NNLS tolerance.
    #[arg(long, global = true)]
    tau: Option<f64>,
    /// Number of training snapshots.
    #[arg(long, global = true)]
    nt: Option<usize>,
    /// Restrict to one technique: pod, ecsw-pod, qm, eecsw-qm.
    #[arg(long, global = true)]
    technique: Option<Technique>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the mesh, mass and stiffness matrices and natural frequencies.
    Mesh,
    /// Run the full-order model and store its snapshots.
    Simulate,
    /// Build the reduction mapping of a technique.
    Basis,
    /// Train the reduced mesh of a hyper-reduced technique.
    Train,
    /// Simulate a reduced model from stored artifacts.
    Reduce,
    /// Run every technique of the scenario and write the report.
    Bench,
    /// Time full and hyper-reduced manifold models across mesh sizes.
    Probe {
        /// Element counts, at least three.
        #[arg(long, value_delimiter = ',', default_value = "2000,4000,8000")]
        sizes: Vec<usize>,
    },
}

fn options(c: &Common) -> RunOptions {
    RunOptions {
        threads: c.threads,
        tau: c.tau,
        n_t: c.nt,
        only: c.technique,
        cache_dir: Some(c.out.clone()),
    }
}

fn technique_spec(
    s: &Scenario,
    c: &Common,
    allowed: impl Fn(Technique) -> bool,
) -> Result<TechniqueSpec> {
    let wanted = c.technique.context("--technique is required")?;
    anyhow::ensure!(
        allowed(wanted),
        "technique {wanted} is not valid for this command"
    );
    s.techniques
        .iter()
        .find(|t| t.kind == wanted)
        .cloned()
        .with_context(|| format!("scenario `{}` has no {wanted} technique", s.name))
}

fn basis_path(out: &Path, spec: &TechniqueSpec) -> PathBuf {
    out.join(format!(
        "basis-{}.bin",
        TechniqueSpec {
            kind: spec.kind.base(),
            m: spec.m,
            terms: spec.terms
        }
        .tag()
    ))
}

fn mesh_path(out: &Path, spec: &TechniqueSpec) -> PathBuf {
    out.join(format!("mesh-{}.txt", spec.tag()))
}

fn load_full(setup: &Setup, out: &Path) -> Result<FullRun> {
    run_full_cached(setup, out)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let c = &cli.common;
    let mut scenario = Scenario::read(&c.config)?;
    let opts = options(c);
    let out = &c.out;
    std::fs::create_dir_all(out)?;

    match cli.command {
        Command::Bench => {
            let outcome = run_scenario(&scenario, &opts)?;
            outcome.report.write(out)?;
            let mesh = outcome.setup.structure.mesh();
            let cols = monitor_dofs(mesh);
            let full = &outcome.full.trajectory;
            write_trajectory_csv(
                out.join("trajectories/hfm.csv"),
                &full.times,
                &full.x,
                &cols,
            )?;
            for run in &outcome.runs {
                let name = run.spec.tag();
                write_trajectory_csv(
                    out.join(format!("trajectories/{name}.csv")),
                    &run.trajectory.times,
                    &run.lifted,
                    &cols,
                )?;
                container::write(basis_path(out, &run.spec), &run.mapping)?;
                if let Some(m) = &run.mesh {
                    m.write(mesh_path(out, &run.spec))?;
                }
            }
            print!("{}", outcome.report.to_text());
        }
        Command::Probe { sizes } => {
            if let Some(t) = c.threads {
                scenario.timing.threads = t;
            }
            if let Some(tau) = c.tau {
                scenario.training.tau = tau;
            }
            if let Some(nt) = c.nt {
                scenario.training.n_t = nt;
            }
            let table = scaling_probe(&scenario, &sizes, c.seed)?;
            std::fs::write(out.join("probe.txt"), table.to_text())?;
            std::fs::write(out.join("probe.csv"), table.to_csv()?)?;
            print!("{}", table.to_text());
        }
        command => {
            let scenario = RunOptions {
                only: None,
                ..opts.clone()
            }
            .apply(&scenario)?;
            let pool = thread_pool(scenario.timing.threads)?;
            pool.install(|| run_stage(command, &scenario, c))?;
        }
    }
    Ok(())
}

fn run_stage(command: Command, scenario: &Scenario, c: &Common) -> Result<()> {
    let out = &c.out;
    let setup = Setup::new(scenario)?;
    let s = &setup.structure;
    match command {
        Command::Mesh => {
            let mesh = s.mesh();
            let mut w = csv::Writer::from_path(out.join("nodes.csv"))?;
            w.write_record(["node", "x", "y"])?;
            for (i, p) in mesh.nodes().iter().enumerate() {
                w.write_record([i.to_string(), p[0].to_string(), p[1].to_string()])?;
            }
            w.flush()?;
            mtx::write_sparse_symmetric(out.join("mass.mtx"), s.mass())?;
            mtx::write_sparse_symmetric(out.join("stiffness.mtx"), s.stiffness())?;
            println!(
                "{} nodes, {} elements, {} free DOFs",
                mesh.n_nodes(),
                mesh.n_elements(),
                s.n_dofs()
            );
            for (k, w) in setup.frequencies.iter().enumerate() {
                println!("omega_{} = {w:.6e} rad/s", k + 1);
            }
        }
        Command::Simulate => {
            let full = load_full(&setup, out)?;
            let t = &full.trajectory;
            write_trajectory_csv(
                out.join("trajectories/hfm.csv"),
                &t.times,
                &t.x,
                &monitor_dofs(s.mesh()),
            )?;
            println!(
                "{} steps, median {:.3} s",
                setup.n_steps,
                full.timing.median()
            );
        }
        Command::Basis => {
            let spec = technique_spec(scenario, c, |t| !t.is_hyper())?;
            let full = load_full(&setup, out)?;
            let mapping = build_mapping(&setup, &full, spec.kind, spec.m)?;
            container::write(basis_path(out, &spec), &mapping)?;
            println!("wrote {}", basis_path(out, &spec).display());
        }
        Command::Train => {
            let spec = technique_spec(scenario, c, Technique::is_hyper)?;
            let full = load_full(&setup, out)?;
            let mapping = read_or_build_mapping(&setup, &full, &spec, out)?;
            let trained = train_mesh(&setup, &full, &mapping, spec.terms)?;
            trained.mesh.write(mesh_path(out, &spec))?;
            println!(
                "{} of {} elements, residual {:.3e}",
                trained.mesh.len(),
                trained.mesh.n_elements,
                trained.mesh.residual
            );
        }
        Command::Reduce => {
            let spec = technique_spec(scenario, c, |_| true)?;
            let full = load_full(&setup, out)?;
            let mapping = read_or_build_mapping(&setup, &full, &spec, out)?;
            let mut model = ReducedModel::new(s.clone(), mapping, Sampling::Full, spec.terms)?;
            let mut mesh = None;
            if spec.kind.is_hyper() {
                let m = ReducedMesh::read(mesh_path(out, &spec)).context("run `train` first")?;
                model = model.with_sampling(Sampling::Reduced(m.clone()))?;
                mesh = Some(m);
            }
            let run = run_model(&setup, &full, &spec, model, mesh, None)?;
            let name = spec.tag();
            let t = &run.trajectory;
            write_trajectory_csv(
                out.join(format!("trajectories/{name}-q.csv")),
                &t.times,
                &t.x,
                &coordinate_columns(spec.m),
            )?;
            write_trajectory_csv(
                out.join(format!("trajectories/{name}.csv")),
                &t.times,
                &run.lifted,
                &monitor_dofs(s.mesh()),
            )?;
            println!(
                "{} m={}: GRE_M {:.4}%, median {:.4} s",
                spec.kind,
                spec.m,
                run.gre_m,
                run.timing.median()
            );
        }
        Command::Bench | Command::Probe { .. } => unreachable!(),
    }
    Ok(())
}

fn read_or_build_mapping(
    setup: &Setup,
    full: &FullRun,
    spec: &TechniqueSpec,
    out: &Path,
) -> Result<hyperreduce::basis::Mapping> {
    let path = basis_path(out, spec);
    match container::read(&path) {
        Ok(m) if m.dim() == spec.m && m.n() == setup.structure.n_dofs() => Ok(m),
        _ => {
            let m = build_mapping(setup, full, spec.kind, spec.m)?;
            container::write(&path, &m)?;
            Ok(m)
        }
    }
}
