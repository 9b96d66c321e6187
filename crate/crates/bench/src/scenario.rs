//! Scenario configuration.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use hyperreduce::fe::{LoadConfig, LoadFunction, Rayleigh, StripConfig, StructureConfig};
use hyperreduce::rom::TermSelection;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Technique {
    Pod,
    EcswPod,
    Qm,
    EecswQm,
}

impl Technique {
    pub const ALL: [Technique; 4] = [
        Technique::Pod,
        Technique::EcswPod,
        Technique::Qm,
        Technique::EecswQm,
    ];

    pub fn is_hyper(self) -> bool {
        matches!(self, Technique::EcswPod | Technique::EecswQm)
    }

    pub fn is_manifold(self) -> bool {
        matches!(self, Technique::Qm | Technique::EecswQm)
    }

    /// The unsampled technique sharing this technique's mapping.
    pub fn base(self) -> Technique {
        match self {
            Technique::EcswPod => Technique::Pod,
            Technique::EecswQm => Technique::Qm,
            t => t,
        }
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Technique::Pod => "POD",
            Technique::EcswPod => "ECSW-POD",
            Technique::Qm => "QM",
            Technique::EecswQm => "EECSW-QM",
        })
    }
}

impl FromStr for Technique {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "pod" => Ok(Technique::Pod),
            "ecsw-pod" => Ok(Technique::EcswPod),
            "qm" => Ok(Technique::Qm),
            "eecsw-qm" => Ok(Technique::EecswQm),
            _ => Err(format!(
                "unknown technique `{s}` (pod, ecsw-pod, qm, eecsw-qm)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadKind {
    /// `A sin(ωt)`, `ω` defaulting to the first natural frequency.
    Sinusoidal,
    /// `A sin²(ωt)` on one half period, `ω` defaulting to the mean of the
    /// first two natural frequencies.
    SinSquaredPulse,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadSpec {
    pub pressure: f64,
    pub kind: LoadKind,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default)]
    pub omega: Option<f64>,
}

impl LoadSpec {
    /// Load configuration with `ω` resolved from the natural frequencies.
    pub fn resolve(&self, frequencies: &[f64]) -> LoadConfig {
        let function = match self.kind {
            LoadKind::Sinusoidal => LoadFunction::Sinusoidal {
                amplitude: self.amplitude,
                omega: self.omega.unwrap_or(frequencies[0]),
            },
            LoadKind::SinSquaredPulse => LoadFunction::SinSquaredPulse {
                amplitude: self.amplitude,
                omega: self
                    .omega
                    .unwrap_or(0.5 * (frequencies[0] + frequencies[1])),
            },
        };
        LoadConfig {
            pressure: self.pressure,
            function,
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    /// Duration in first-mode periods.
    pub periods: f64,
    /// Time steps per first-mode period.
    #[serde(default = "default_steps_per_period")]
    pub steps_per_period: usize,
}

fn default_steps_per_period() -> usize {
    100
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSpec {
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_nt")]
    pub n_t: usize,
}

fn default_tau() -> f64 {
    0.01
}

fn default_nt() -> usize {
    200
}

impl Default for TrainingSpec {
    fn default() -> Self {
        Self {
            tau: default_tau(),
            n_t: default_nt(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingSpec {
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_threads")]
    pub threads: usize,
}

fn default_repetitions() -> usize {
    3
}

fn default_threads() -> usize {
    1
}

impl Default for TimingSpec {
    fn default() -> Self {
        Self {
            repetitions: default_repetitions(),
            threads: default_threads(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TechniqueSpec {
    pub kind: Technique,
    pub m: usize,
    /// Terms evaluated on the sampled elements of hyper-reduced techniques.
    #[serde(default)]
    pub terms: TermSelection,
}

impl TechniqueSpec {
    /// Sampled terms when they differ from the default selection.
    fn term_suffix(&self) -> Option<String> {
        (self.kind.is_hyper() && self.terms != TermSelection::ALL).then(|| self.terms.to_string())
    }

    /// Report name, e.g. `EECSW-QM` or `EECSW-QM[internal]`.
    pub fn label(&self) -> String {
        match self.term_suffix() {
            Some(t) => format!("{}[{t}]", self.kind),
            None => self.kind.to_string(),
        }
    }

    /// File name stem, e.g. `eecsw-qm-m2` or `eecsw-qm-m2-internal`.
    pub fn tag(&self) -> String {
        let base = format!("{}-m{}", self.kind.to_string().to_lowercase(), self.m);
        match self.term_suffix() {
            Some(t) => format!("{base}-{}", t.replace(',', "+")),
            None => base,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub mesh: StripConfig,
    #[serde(default)]
    pub damping: Rayleigh,
    pub load: LoadSpec,
    pub time: TimeSpec,
    #[serde(default)]
    pub training: TrainingSpec,
    #[serde(default)]
    pub timing: TimingSpec,
    #[serde(rename = "technique", default)]
    pub techniques: Vec<TechniqueSpec>,
}

impl Scenario {
    pub fn from_toml_str(s: &str) -> anyhow::Result<Self> {
        let scenario: Scenario = toml::from_str(s)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn read(path: impl AsRef<Path>) -> anyhow::Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        anyhow::ensure!(self.time.periods > 0.0, "time.periods must be positive");
        anyhow::ensure!(
            self.time.steps_per_period > 0,
            "time.steps_per_period must be positive"
        );
        anyhow::ensure!(
            self.training.tau > 0.0 && self.training.tau <= 1.0,
            "training.tau must lie in (0, 1]"
        );
        anyhow::ensure!(self.training.n_t > 0, "training.n_t must be positive");
        anyhow::ensure!(
            self.timing.repetitions > 0,
            "timing.repetitions must be positive"
        );
        for t in &self.techniques {
            anyhow::ensure!(t.m > 0, "{} needs m > 0", t.kind);
        }
        Ok(())
    }

    /// Structure configuration once `ω` is known.
    pub fn structure_config(&self, frequencies: &[f64]) -> StructureConfig {
        StructureConfig {
            mesh: self.mesh.clone(),
            damping: self.damping,
            load: Some(self.load.resolve(frequencies)),
        }
    }

    /// Unloaded structure configuration, used to compute frequencies.
    pub fn free_config(&self) -> StructureConfig {
        StructureConfig {
            mesh: self.mesh.clone(),
            damping: self.damping,
            load: None,
        }
    }

    /// Number of vibration modes any stage needs.
    pub fn modes_needed(&self) -> usize {
        self.techniques
            .iter()
            .filter(|t| t.kind.is_manifold())
            .map(|t| t.m)
            .max()
            .unwrap_or(0)
            .max(2)
    }
}
