use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fe::assembly;
use crate::fe::element::{ElementKernel, Rayleigh, Section, VonKarmanFrame};
use crate::fe::load::{uniform_transverse_load, LoadCase, LoadFunction};
use crate::fe::mesh::{EndSupport, Mesh};
use crate::fe::skyline::SkylineLdl;
use crate::fe::sparse::{SparseSymMatrix, SparsityPattern};

fn pinned() -> EndSupport {
    EndSupport::Pinned
}

/// Generator parameters for a straight plate strip.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StripConfig {
    pub length: f64,
    pub width: f64,
    pub thickness: f64,
    pub elements: usize,
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub density: f64,
    #[serde(default = "pinned")]
    pub left: EndSupport,
    #[serde(default = "pinned")]
    pub right: EndSupport,
}

impl StripConfig {
    pub fn section(&self) -> Section {
        Section::plate_strip(
            self.youngs_modulus,
            self.poisson_ratio,
            self.density,
            self.width,
            self.thickness,
        )
    }

    pub fn mesh(&self) -> Result<Mesh> {
        Mesh::strip(self.length, self.elements, self.left, self.right)
    }
}

/// Uniform pressure over the strip width with a time history.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadConfig {
    pub pressure: f64,
    #[serde(flatten)]
    pub function: LoadFunction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureConfig {
    pub mesh: StripConfig,
    #[serde(default)]
    pub damping: Rayleigh,
    #[serde(default)]
    pub load: Option<LoadConfig>,
}

impl StructureConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Format(e.to_string()))
    }
}

/// Assembled high-fidelity model: mesh, element kernel, constant operators
/// and load case.
#[derive(Clone, Debug)]
pub struct Structure {
    mesh: Mesh,
    kernel: VonKarmanFrame,
    pattern: Arc<SparsityPattern>,
    mass: SparseSymMatrix,
    damping: SparseSymMatrix,
    stiffness: SparseSymMatrix,
    load: LoadCase,
}

impl Structure {
    pub fn new(mesh: Mesh, kernel: VonKarmanFrame, load: LoadCase) -> Result<Self> {
        if kernel.n_elements() != mesh.n_elements() {
            return Err(Error::DimensionMismatch {
                what: "kernel elements",
                expected: mesh.n_elements(),
                found: kernel.n_elements(),
            });
        }
        if load.spatial.len() != mesh.n_dofs() {
            return Err(Error::DimensionMismatch {
                what: "load vector",
                expected: mesh.n_dofs(),
                found: load.spatial.len(),
            });
        }
        let pattern = Arc::new(SparsityPattern::from_mesh(&mesh));
        let mass = assembly::assemble_mass(&mesh, &kernel, &pattern)?;
        let damping = assembly::assemble_damping(&mesh, &kernel, &pattern)?;
        let stiffness =
            assembly::assemble_tangent(&mesh, &kernel, &pattern, &DVector::zeros(mesh.n_dofs()))?;
        Ok(Self {
            mesh,
            kernel,
            pattern,
            mass,
            damping,
            stiffness,
            load,
        })
    }

    pub fn from_config(cfg: &StructureConfig) -> Result<Self> {
        let mesh = cfg.mesh.mesh()?;
        let kernel = VonKarmanFrame::new(&mesh, cfg.mesh.section(), cfg.damping)?;
        let load = match cfg.load {
            Some(lc) => LoadCase::new(
                uniform_transverse_load(&mesh, lc.pressure * cfg.mesh.width),
                lc.function,
            ),
            None => LoadCase::none(mesh.n_dofs()),
        };
        Self::new(mesh, kernel, load)
    }

    pub fn with_load(mut self, load: LoadCase) -> Result<Self> {
        if load.spatial.len() != self.n_dofs() {
            return Err(Error::DimensionMismatch {
                what: "load vector",
                expected: self.n_dofs(),
                found: load.spatial.len(),
            });
        }
        self.load = load;
        Ok(self)
    }

    pub fn n_dofs(&self) -> usize {
        self.mesh.n_dofs()
    }

    pub fn n_elements(&self) -> usize {
        self.mesh.n_elements()
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn kernel(&self) -> &VonKarmanFrame {
        &self.kernel
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn mass(&self) -> &SparseSymMatrix {
        &self.mass
    }

    pub fn damping(&self) -> &SparseSymMatrix {
        &self.damping
    }

    /// Linear stiffness `K(0)`.
    pub fn stiffness(&self) -> &SparseSymMatrix {
        &self.stiffness
    }

    pub fn load(&self) -> &LoadCase {
        &self.load
    }

    pub fn internal_force(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        assembly::assemble_internal_force(&self.mesh, &self.kernel, u)
    }

    pub fn tangent(&self, u: &DVector<f64>) -> Result<SparseSymMatrix> {
        assembly::assemble_tangent(&self.mesh, &self.kernel, &self.pattern, u)
    }

    pub fn force_and_tangent(&self, u: &DVector<f64>) -> Result<(DVector<f64>, SparseSymMatrix)> {
        assembly::assemble_force_and_tangent(&self.mesh, &self.kernel, &self.pattern, u)
    }

    pub fn strain_energy(&self, u: &DVector<f64>) -> Result<f64> {
        assembly::strain_energy(&self.mesh, &self.kernel, u)
    }

    pub fn kinetic_energy(&self, v: &DVector<f64>) -> f64 {
        0.5 * self.mass.quad_form(v)
    }

    pub fn dissipation(&self, v: &DVector<f64>) -> f64 {
        0.5 * self.damping.quad_form(v)
    }

    /// Static equilibrium `f(u) + λ l = 0` by Newton iteration from `u = 0`.
    pub fn static_solve(&self, load_factor: f64) -> Result<DVector<f64>> {
        let rhs = &self.load.spatial * load_factor;
        let mut u = DVector::zeros(self.n_dofs());
        let scale = rhs.norm().max(f64::MIN_POSITIVE);
        for it in 0..50 {
            let (f, k) = self.force_and_tangent(&u)?;
            let r = &f + &rhs;
            if r.norm() <= 1e-12 * scale {
                return Ok(u);
            }
            let du = SkylineLdl::factor(&k)?.solve(&r);
            u += &du;
            if du.norm() <= 1e-13 * u.norm() {
                return Ok(u);
            }
            if it == 49 {
                break;
            }
        }
        let r = self.internal_force(&u)? + &rhs;
        Err(Error::NewtonDivergence {
            step: 0,
            residual: r.norm() / scale,
        })
    }
}
