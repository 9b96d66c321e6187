#![allow(dead_code)]

use hyperreduce::fe::{
    EndSupport, LoadConfig, LoadFunction, Rayleigh, StripConfig, Structure, StructureConfig,
};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const LENGTH: f64 = 400.0;
pub const WIDTH: f64 = 40.0;
pub const THICKNESS: f64 = 2.0;
pub const YOUNGS: f64 = 70_000.0;
pub const POISSON: f64 = 0.33;
pub const DENSITY: f64 = 2.7e-9;

pub fn strip(elements: usize) -> StripConfig {
    StripConfig {
        length: LENGTH,
        width: WIDTH,
        thickness: THICKNESS,
        elements,
        youngs_modulus: YOUNGS,
        poisson_ratio: POISSON,
        density: DENSITY,
        left: EndSupport::Pinned,
        right: EndSupport::Pinned,
    }
}

pub fn plate(elements: usize, damping: Rayleigh, load: Option<(f64, LoadFunction)>) -> Structure {
    Structure::from_config(&StructureConfig {
        mesh: strip(elements),
        damping,
        load: load.map(|(pressure, function)| LoadConfig { pressure, function }),
    })
    .unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random state with transverse deflections of order `amp` and
/// compatible rotations and axial displacements.
pub fn random_state(s: &Structure, r: &mut ChaCha8Rng, amp: f64) -> DVector<f64> {
    let mesh = s.mesh();
    let mut u = DVector::zeros(s.n_dofs());
    for node in 0..mesh.n_nodes() {
        let scales = [amp * amp / LENGTH, amp, 20.0 * amp / LENGTH];
        for (k, scale) in scales.iter().enumerate() {
            if let Some(d) = mesh.dof(node, k) {
                u[d] = scale * r.random_range(-1.0..1.0);
            }
        }
    }
    u
}

pub fn rel(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}
