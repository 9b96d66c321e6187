//! Two-node von Kármán plane-frame element.
//!
//! Local DOFs are `[u1, w1, θ1, u2, w2, θ2]`. The axial displacement is
//! linear, the transverse displacement is a cubic Hermite interpolant and
//! the membrane strain carries the moderate-rotation term
//! `ε = u' + ½ (w')²`. Membrane terms use a 2-point Gauss rule, bending
//! terms a 3-point rule and the consistent mass a 4-point rule.
//!
//! Sign convention: the internal force is `f_e = -∂V_e/∂u_e`, so the
//! tangent stiffness is `K_e = -∂f_e/∂u_e = ∂²V_e/∂u_e²`.

use nalgebra::{Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fe::mesh::Mesh;

pub type ElementVector = Vector6<f64>;
pub type ElementMatrix = Matrix6<f64>;

/// Per-element evaluation contract. Implementations are pure functions of
/// the element index and the element-local state.
pub trait ElementKernel: Send + Sync {
    fn n_elements(&self) -> usize;

    fn mass(&self, e: usize) -> &ElementMatrix;

    /// Constant damping matrix `C_e`.
    fn damping(&self, e: usize) -> &ElementMatrix;

    fn internal_force(&self, e: usize, ue: &ElementVector) -> ElementVector;

    fn tangent(&self, e: usize, ue: &ElementVector) -> ElementMatrix;

    fn strain_energy(&self, e: usize, ue: &ElementVector) -> f64;

    fn force_and_tangent(&self, e: usize, ue: &ElementVector) -> (ElementVector, ElementMatrix) {
        (self.internal_force(e, ue), self.tangent(e, ue))
    }

    fn kinetic_energy(&self, e: usize, ve: &ElementVector) -> f64 {
        0.5 * ve.dot(&(self.mass(e) * ve))
    }

    /// Dissipation functional `D_e = ½ u̇_eᵀ C_e u̇_e` (homogeneous of degree 2).
    fn dissipation(&self, e: usize, ve: &ElementVector) -> f64 {
        0.5 * ve.dot(&(self.damping(e) * ve))
    }
}

/// Cross-section and material of a frame strip.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub axial_rigidity: f64,
    pub bending_rigidity: f64,
    pub mass_per_length: f64,
}

impl Section {
    /// Rectangular plate strip in cylindrical bending: the effective modulus
    /// is the plate modulus `E / (1 - ν²)`.
    pub fn plate_strip(
        youngs_modulus: f64,
        poisson_ratio: f64,
        density: f64,
        width: f64,
        thickness: f64,
    ) -> Self {
        let modulus = youngs_modulus / (1.0 - poisson_ratio * poisson_ratio);
        let area = width * thickness;
        let inertia = width * thickness.powi(3) / 12.0;
        Self {
            axial_rigidity: modulus * area,
            bending_rigidity: modulus * inertia,
            mass_per_length: density * area,
        }
    }
}

/// Rayleigh damping `C = αM + βK(0)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Rayleigh {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Clone, Debug)]
struct FrameElement {
    length: f64,
    cos: f64,
    sin: f64,
    mass: ElementMatrix,
    damping: ElementMatrix,
}

#[derive(Clone, Debug)]
pub struct VonKarmanFrame {
    section: Section,
    elements: Vec<FrameElement>,
    nonlinear: bool,
}

const GAUSS2: [(f64, f64); 2] = [
    (0.211_324_865_405_187_1, 0.5),
    (0.788_675_134_594_812_9, 0.5),
];

const GAUSS3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_3, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

const GAUSS4: [(f64, f64); 4] = [
    (0.069_431_844_202_973_7, 0.173_927_422_568_726_9),
    (0.330_009_478_207_571_9, 0.326_072_577_431_273_1),
    (0.669_990_521_792_428_1, 0.326_072_577_431_273_1),
    (0.930_568_155_797_026_3, 0.173_927_422_568_726_9),
];

impl VonKarmanFrame {
    pub fn new(mesh: &Mesh, section: Section, rayleigh: Rayleigh) -> Result<Self> {
        Self::build(mesh, section, rayleigh, true)
    }

    /// Same element with the quadratic membrane term dropped.
    pub fn linear(mesh: &Mesh, section: Section, rayleigh: Rayleigh) -> Result<Self> {
        Self::build(mesh, section, rayleigh, false)
    }

    fn build(mesh: &Mesh, section: Section, rayleigh: Rayleigh, nonlinear: bool) -> Result<Self> {
        let mut elements = Vec::with_capacity(mesh.n_elements());
        for e in 0..mesh.n_elements() {
            let length = mesh.element_length(e);
            let (cos, sin) = mesh.element_direction(e);
            let mut el = FrameElement {
                length,
                cos,
                sin,
                mass: ElementMatrix::zeros(),
                damping: ElementMatrix::zeros(),
            };
            el.mass = rotate_matrix(&el, &local_mass(length, section.mass_per_length));
            if el.mass.cholesky().is_none() {
                return Err(Error::IndefiniteMass { element: e });
            }
            let (_, _, k0) = local_response(&el, &section, &ElementVector::zeros(), nonlinear);
            el.damping = el.mass * rayleigh.alpha + rotate_matrix(&el, &k0) * rayleigh.beta;
            elements.push(el);
        }
        Ok(Self {
            section,
            elements,
            nonlinear,
        })
    }

    pub fn section(&self) -> &Section {
        &self.section
    }

    pub fn is_nonlinear(&self) -> bool {
        self.nonlinear
    }

    /// Strain energy, internal force and tangent in one pass.
    pub fn evaluate(&self, e: usize, ue: &ElementVector) -> (f64, ElementVector, ElementMatrix) {
        let el = &self.elements[e];
        let dl = to_local(el, ue);
        let (v, grad, hess) = local_response(el, &self.section, &dl, self.nonlinear);
        (v, -to_global(el, &grad), rotate_matrix(el, &hess))
    }
}

impl ElementKernel for VonKarmanFrame {
    fn n_elements(&self) -> usize {
        self.elements.len()
    }

    fn mass(&self, e: usize) -> &ElementMatrix {
        &self.elements[e].mass
    }

    fn damping(&self, e: usize) -> &ElementMatrix {
        &self.elements[e].damping
    }

    fn internal_force(&self, e: usize, ue: &ElementVector) -> ElementVector {
        let el = &self.elements[e];
        let dl = to_local(el, ue);
        -to_global(el, &local_gradient(el, &self.section, &dl, self.nonlinear))
    }

    fn tangent(&self, e: usize, ue: &ElementVector) -> ElementMatrix {
        self.evaluate(e, ue).2
    }

    fn strain_energy(&self, e: usize, ue: &ElementVector) -> f64 {
        self.evaluate(e, ue).0
    }

    fn force_and_tangent(&self, e: usize, ue: &ElementVector) -> (ElementVector, ElementMatrix) {
        let (_, f, k) = self.evaluate(e, ue);
        (f, k)
    }
}

fn to_local(el: &FrameElement, v: &ElementVector) -> ElementVector {
    let (c, s) = (el.cos, el.sin);
    ElementVector::new(
        c * v[0] + s * v[1],
        -s * v[0] + c * v[1],
        v[2],
        c * v[3] + s * v[4],
        -s * v[3] + c * v[4],
        v[5],
    )
}

fn to_global(el: &FrameElement, v: &ElementVector) -> ElementVector {
    let (c, s) = (el.cos, el.sin);
    ElementVector::new(
        c * v[0] - s * v[1],
        s * v[0] + c * v[1],
        v[2],
        c * v[3] - s * v[4],
        s * v[3] + c * v[4],
        v[5],
    )
}

/// `Rᵀ A R`, mirrored from the upper triangle so the result is exactly symmetric.
fn rotate_matrix(el: &FrameElement, a: &ElementMatrix) -> ElementMatrix {
    let out = if el.sin == 0.0 && el.cos == 1.0 {
        *a
    } else {
        let (c, s) = (el.cos, el.sin);
        let mut r = ElementMatrix::identity();
        for b in [0, 3] {
            r[(b, b)] = c;
            r[(b, b + 1)] = s;
            r[(b + 1, b)] = -s;
            r[(b + 1, b + 1)] = c;
        }
        r.transpose() * a * r
    };
    symmetrize_upper(out)
}

fn symmetrize_upper(mut a: ElementMatrix) -> ElementMatrix {
    for i in 0..6 {
        for j in 0..i {
            a[(i, j)] = a[(j, i)];
        }
    }
    a
}

/// Gradient of `w` along the axis at parametric point `xi`.
fn slope_vector(len: f64, xi: f64) -> ElementVector {
    ElementVector::new(
        0.0,
        (-6.0 * xi + 6.0 * xi * xi) / len,
        1.0 - 4.0 * xi + 3.0 * xi * xi,
        0.0,
        (6.0 * xi - 6.0 * xi * xi) / len,
        -2.0 * xi + 3.0 * xi * xi,
    )
}

fn curvature_vector(len: f64, xi: f64) -> ElementVector {
    ElementVector::new(
        0.0,
        (-6.0 + 12.0 * xi) / (len * len),
        (-4.0 + 6.0 * xi) / len,
        0.0,
        (6.0 - 12.0 * xi) / (len * len),
        (-2.0 + 6.0 * xi) / len,
    )
}

fn axial_vector(len: f64) -> ElementVector {
    ElementVector::new(-1.0 / len, 0.0, 0.0, 1.0 / len, 0.0, 0.0)
}

fn local_gradient(
    el: &FrameElement,
    section: &Section,
    d: &ElementVector,
    nonlinear: bool,
) -> ElementVector {
    let len = el.length;
    let a = axial_vector(len);
    let axial_strain = a.dot(d);
    let mut grad = ElementVector::zeros();
    for &(xi, w) in &GAUSS2 {
        let scale = w * len * section.axial_rigidity;
        if nonlinear {
            let g = slope_vector(len, xi);
            let slope = g.dot(d);
            let eps = axial_strain + 0.5 * slope * slope;
            grad += (a + g * slope) * (scale * eps);
        } else {
            grad += a * (scale * axial_strain);
        }
    }
    for &(xi, w) in &GAUSS3 {
        let c = curvature_vector(len, xi);
        grad += c * (w * len * section.bending_rigidity * c.dot(d));
    }
    grad
}

/// Local strain energy, its gradient and (exactly symmetric) Hessian.
fn local_response(
    el: &FrameElement,
    section: &Section,
    d: &ElementVector,
    nonlinear: bool,
) -> (f64, ElementVector, ElementMatrix) {
    let len = el.length;
    let a = axial_vector(len);
    let axial_strain = a.dot(d);
    let mut energy = 0.0;
    let mut grad = ElementVector::zeros();
    let mut hess = ElementMatrix::zeros();

    for &(xi, w) in &GAUSS2 {
        let scale = w * len * section.axial_rigidity;
        let g = slope_vector(len, xi);
        let (eps, b) = if nonlinear {
            let slope = g.dot(d);
            (axial_strain + 0.5 * slope * slope, a + g * slope)
        } else {
            (axial_strain, a)
        };
        energy += 0.5 * scale * eps * eps;
        grad += b * (scale * eps);
        for j in 0..6 {
            for i in 0..=j {
                let mut h = b[i] * b[j];
                if nonlinear {
                    h += eps * g[i] * g[j];
                }
                hess[(i, j)] += scale * h;
            }
        }
    }
    for &(xi, w) in &GAUSS3 {
        let scale = w * len * section.bending_rigidity;
        let c = curvature_vector(len, xi);
        let kappa = c.dot(d);
        energy += 0.5 * scale * kappa * kappa;
        grad += c * (scale * kappa);
        for j in 0..6 {
            for i in 0..=j {
                hess[(i, j)] += scale * c[i] * c[j];
            }
        }
    }
    (energy, grad, symmetrize_upper(hess))
}

fn local_mass(len: f64, mass_per_length: f64) -> ElementMatrix {
    let mut m = ElementMatrix::zeros();
    for &(xi, w) in &GAUSS4 {
        let (x2, x3) = (xi * xi, xi * xi * xi);
        let nu = ElementVector::new(1.0 - xi, 0.0, 0.0, xi, 0.0, 0.0);
        let nw = ElementVector::new(
            0.0,
            1.0 - 3.0 * x2 + 2.0 * x3,
            len * (xi - 2.0 * x2 + x3),
            0.0,
            3.0 * x2 - 2.0 * x3,
            len * (x3 - x2),
        );
        let scale = w * len * mass_per_length;
        for j in 0..6 {
            for i in 0..=j {
                m[(i, j)] += scale * (nu[i] * nu[j] + nw[i] * nw[j]);
            }
        }
    }
    symmetrize_upper(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fe::mesh::EndSupport;

    fn single(len: f64, angle: f64) -> (Mesh, VonKarmanFrame) {
        let nodes = vec![[0.0, 0.0], [len * angle.cos(), len * angle.sin()]];
        let mesh = Mesh::new(nodes, vec![[0, 1]], []).unwrap();
        let section = Section::plate_strip(70_000.0, 0.0, 2.7e-9, 20.0, 0.8);
        let kernel = VonKarmanFrame::new(&mesh, section, Rayleigh::default()).unwrap();
        (mesh, kernel)
    }

    #[test]
    fn zero_state_has_zero_force_and_energy() {
        let (_, k) = single(4.0, 0.3);
        let z = ElementVector::zeros();
        assert_eq!(k.internal_force(0, &z), ElementVector::zeros());
        assert_eq!(k.strain_energy(0, &z), 0.0);
    }

    #[test]
    fn linear_stiffness_matches_closed_form() {
        let len = 2.5;
        let (_, k) = single(len, 0.0);
        let km = k.tangent(0, &ElementVector::zeros());
        let s = k.section();
        let ea = s.axial_rigidity / len;
        let ei = s.bending_rigidity;
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        assert!(rel(km[(0, 0)], ea) < 1e-12);
        assert!(rel(km[(0, 3)], -ea) < 1e-12);
        assert!(rel(km[(1, 1)], 12.0 * ei / len.powi(3)) < 1e-12);
        assert!(rel(km[(1, 2)], 6.0 * ei / len.powi(2)) < 1e-12);
        assert!(rel(km[(2, 2)], 4.0 * ei / len) < 1e-12);
        assert!(rel(km[(2, 5)], 2.0 * ei / len) < 1e-12);
    }

    #[test]
    fn consistent_mass_matches_closed_form() {
        let len = 3.0;
        let (_, k) = single(len, 0.0);
        let m = k.mass(0);
        let rho_a = k.section().mass_per_length;
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        assert!(rel(m[(0, 0)], rho_a * len / 3.0) < 1e-12);
        assert!(rel(m[(1, 1)], 156.0 * rho_a * len / 420.0) < 1e-12);
        assert!(rel(m[(2, 2)], 4.0 * rho_a * len.powi(3) / 420.0) < 1e-12);
        assert!(rel(m[(1, 5)], -13.0 * rho_a * len * len / 420.0) < 1e-12);
    }

    #[test]
    fn force_is_negative_energy_gradient() {
        let (_, k) = single(4.0, 0.7);
        let u = ElementVector::new(0.01, -0.3, 0.05, -0.02, 0.4, -0.08);
        let f = k.internal_force(0, &u);
        for i in 0..6 {
            let h = 1e-6;
            let mut up = u;
            let mut um = u;
            up[i] += h;
            um[i] -= h;
            let fd = -(k.strain_energy(0, &up) - k.strain_energy(0, &um)) / (2.0 * h);
            assert!(
                (fd - f[i]).abs() <= 1e-6 * f.norm(),
                "component {i}: {fd} vs {}",
                f[i]
            );
        }
    }

    #[test]
    fn tangent_symmetric_and_consistent_with_force() {
        let (_, k) = single(4.0, -0.4);
        let u = ElementVector::new(0.02, 0.5, -0.1, 0.01, -0.3, 0.2);
        let km = k.tangent(0, &u);
        assert_eq!(km, km.transpose());
        let h = 1e-6;
        for j in 0..6 {
            let mut up = u;
            let mut um = u;
            up[j] += h;
            um[j] -= h;
            let col = -(k.internal_force(0, &up) - k.internal_force(0, &um)) / (2.0 * h);
            assert!((col - km.column(j)).norm() <= 1e-6 * km.norm());
        }
    }

    #[test]
    fn mass_is_rotation_invariant_in_energy() {
        let (_, flat) = single(2.0, 0.0);
        let (_, tilted) = single(2.0, 1.1);
        let rigid = |c: f64, s: f64| ElementVector::new(c, s, 0.0, c, s, 0.0);
        let t_flat = flat.kinetic_energy(0, &rigid(1.0, 0.0));
        let t_tilt = tilted.kinetic_energy(0, &rigid(1.1f64.cos(), 1.1f64.sin()));
        assert!((t_flat - t_tilt).abs() <= 1e-12 * t_flat);
    }

    #[test]
    fn rigid_translation_is_strain_free() {
        let mesh = Mesh::strip(10.0, 1, EndSupport::Free, EndSupport::Free).unwrap();
        let section = Section::plate_strip(1.0, 0.3, 1.0, 1.0, 0.1);
        let k = VonKarmanFrame::new(&mesh, section, Rayleigh::default()).unwrap();
        let u = ElementVector::new(0.3, -0.7, 0.0, 0.3, -0.7, 0.0);
        assert!(k.internal_force(0, &u).norm() < 1e-14);
    }
}
