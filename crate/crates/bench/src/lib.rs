//! Scenario runner for the hyperreduce toolkit: full-order reference runs,
//! reduced and hyper-reduced comparisons, reports and a scaling probe.

pub mod gre;
pub mod output;
pub mod pipeline;
pub mod probe;
pub mod report;
pub mod scenario;

pub use gre::gre_m;
pub use pipeline::{run_scenario, Outcome, RunOptions, Setup};
pub use probe::{scaling_probe, ProbeTable};
pub use report::{BenchReport, ReportRow};
pub use scenario::{Scenario, Technique, TechniqueSpec};
