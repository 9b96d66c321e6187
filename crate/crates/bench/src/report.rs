use std::fmt::Write as _;
use std::path::Path;

use anyhow::Result;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub technique: String,
    pub m: usize,
    pub elements: usize,
    /// Percent.
    pub gre_m: f64,
    /// Median online integration time in seconds.
    pub t_sim: f64,
    pub speedup: f64,
    pub nnls_residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub scenario: String,
    pub n_dofs: usize,
    pub n_elements: usize,
    pub dt: f64,
    pub n_steps: usize,
    pub first_frequency: f64,
    pub tau: f64,
    pub n_t: usize,
    pub threads: usize,
    pub repetitions: usize,
    pub version: String,
    pub rows: Vec<ReportRow>,
}

impl BenchReport {
    pub fn row(&self, technique: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.technique == technique)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario        {}", self.scenario);
        let _ = writeln!(s, "dofs            {}", self.n_dofs);
        let _ = writeln!(s, "elements        {}", self.n_elements);
        let _ = writeln!(s, "omega_1         {:.6e} rad/s", self.first_frequency);
        let _ = writeln!(
            s,
            "dt              {:.6e} s ({} steps)",
            self.dt, self.n_steps
        );
        let _ = writeln!(s, "tau             {}", self.tau);
        let _ = writeln!(s, "n_t             {}", self.n_t);
        let _ = writeln!(s, "threads         {}", self.threads);
        let _ = writeln!(s, "repetitions     {} (median reported)", self.repetitions);
        let _ = writeln!(s, "version         {}", self.version);
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:<20} {:>6} {:>9} {:>10} {:>12} {:>10}",
            "technique", "m", "elements", "GRE_M(%)", "T_sim(s)", "S*"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<20} {:>6} {:>9} {:>10.4} {:>12.5} {:>10.2}",
                r.technique, r.m, r.elements, r.gre_m, r.t_sim, r.speedup
            );
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

    /// Writes `report.txt` and `report.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.txt"), self.to_text())?;
        std::fs::write(dir.join("report.csv"), self.to_csv()?)?;
        Ok(())
    }
}
