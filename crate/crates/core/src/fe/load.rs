use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::fe::assembly::scatter_add;
use crate::fe::element::ElementVector;
use crate::fe::mesh::Mesh;

/// Dynamic load factor `p(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LoadFunction {
    /// `p(t) = A sin(ωt)`.
    Sinusoidal {
        amplitude: f64,
        omega: f64,
    },
    /// `p(t) = A sin²(ωt)` on `0 <= t < π/ω`, zero elsewhere.
    SinSquaredPulse {
        amplitude: f64,
        omega: f64,
    },
    Constant {
        amplitude: f64,
    },
}

impl LoadFunction {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            LoadFunction::Sinusoidal { amplitude, omega } => amplitude * (omega * t).sin(),
            LoadFunction::SinSquaredPulse { amplitude, omega } => {
                if t < 0.0 || t >= PI / omega {
                    0.0
                } else {
                    let s = (omega * t).sin();
                    amplitude * s * s
                }
            }
            LoadFunction::Constant { amplitude } => amplitude,
        }
    }

    pub fn amplitude(&self) -> f64 {
        match *self {
            LoadFunction::Sinusoidal { amplitude, .. }
            | LoadFunction::SinSquaredPulse { amplitude, .. }
            | LoadFunction::Constant { amplitude } => amplitude,
        }
    }
}

/// External load `f_ext(t) = p(t) · l`.
#[derive(Clone, Debug)]
pub struct LoadCase {
    pub spatial: DVector<f64>,
    pub function: LoadFunction,
    /// Whether the load derives from a potential (`V_ext = -uᵀ f_ext`).
    pub conservative: bool,
}

impl LoadCase {
    pub fn new(spatial: DVector<f64>, function: LoadFunction) -> Self {
        let conservative = matches!(function, LoadFunction::Constant { .. });
        Self {
            spatial,
            function,
            conservative,
        }
    }

    pub fn none(n: usize) -> Self {
        Self::new(DVector::zeros(n), LoadFunction::Constant { amplitude: 0.0 })
    }

    pub fn factor(&self, t: f64) -> f64 {
        self.function.value(t)
    }

    pub fn external_force(&self, t: f64) -> DVector<f64> {
        &self.spatial * self.factor(t)
    }
}

/// Consistent nodal load of a uniform transverse line load `q` (force per
/// length) acting normal to every element.
pub fn uniform_transverse_load(mesh: &Mesh, q: f64) -> DVector<f64> {
    let mut l = DVector::zeros(mesh.n_dofs());
    for e in 0..mesh.n_elements() {
        let len = mesh.element_length(e);
        let (c, s) = mesh.element_direction(e);
        let (half, moment) = (0.5 * q * len, q * len * len / 12.0);
        let fe = ElementVector::new(-s * half, c * half, moment, -s * half, c * half, -moment);
        scatter_add(mesh.element_dofs(e), &fe, &mut l);
    }
    l
}
