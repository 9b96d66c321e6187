//! Tangent-space Galerkin reduced model over an element set.
//!
//! Every reduced quantity is an element sum. For each element the rows of
//! `Φ` and `Ω` at its six DOFs are stored once, so evaluating an element
//! never touches a full-length vector. The residual is
//!
//! ```text
//! r = Σ_e w_e P_eᵀ h_e − P_Γᵀ f_ext(t),   h_e = M_e Γ̈_e + C_e Γ̇_e − f_e(Γ_e)
//! ```
//!
//! with `w_e = ξ_e` on the sampled set for the selected terms and `w_e = 1`
//! over the whole mesh for the rest.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix6xX, Vector6};
use rayon::prelude::*;

use crate::basis::mapping::{pair_jacobian, pair_products, unpack_pairs, Mapping};
use crate::error::{Error, Result};
use crate::fe::element::ElementKernel;
use crate::fe::mesh::ELEMENT_DOFS;
use crate::fe::structure::Structure;
use crate::hyper::reduced_mesh::ReducedMesh;
use crate::rom::terms::TermSelection;

const CHUNK: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct ReducedState {
    pub q: DVector<f64>,
    pub qdot: DVector<f64>,
    pub qddot: DVector<f64>,
    pub t: f64,
}

impl ReducedState {
    pub fn new(q: DVector<f64>, qdot: DVector<f64>, qddot: DVector<f64>, t: f64) -> Self {
        Self { q, qdot, qddot, t }
    }

    pub fn zeros(m: usize) -> Self {
        Self::new(DVector::zeros(m), DVector::zeros(m), DVector::zeros(m), 0.0)
    }
}

#[derive(Clone, Debug)]
pub enum Sampling {
    Full,
    Reduced(ReducedMesh),
}

/// `∂r/∂q`, `∂r/∂q̇`, `∂r/∂q̈` together with the residual they linearize.
#[derive(Clone, Debug)]
pub struct ReducedJacobians {
    pub residual: DVector<f64>,
    pub dq: DMatrix<f64>,
    pub dqdot: DMatrix<f64>,
    pub dqddot: DMatrix<f64>,
}

/// `M_r = P_Γᵀ M P_Γ`, `C_r = P_Γᵀ C P_Γ + P_Γᵀ M (Ω·q̇)` and `K_r = ∂r/∂q`.
#[derive(Clone, Debug)]
pub struct ReducedOperators {
    pub mass: DMatrix<f64>,
    pub damping: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
}

struct ElementBlock {
    phi: Matrix6xX<f64>,
    omega: Option<Matrix6xX<f64>>,
}

/// State-dependent quantities shared by all elements of one evaluation.
struct Kinematics<'a> {
    state: &'a ReducedState,
    quadratic: Option<QuadraticTerms>,
}

struct QuadraticTerms {
    half_sq: DVector<f64>,
    s_qdot: DVector<f64>,
    t_q: DMatrix<f64>,
    t_qdot: DMatrix<f64>,
    t_qddot: DMatrix<f64>,
}

impl<'a> Kinematics<'a> {
    fn new(mapping: &Mapping, state: &'a ReducedState) -> Self {
        let quadratic = (!mapping.is_linear()).then(|| QuadraticTerms {
            half_sq: pair_products(&state.q) * 0.5,
            s_qdot: pair_products(&state.qdot),
            t_q: pair_jacobian(&state.q),
            t_qdot: pair_jacobian(&state.qdot),
            t_qddot: pair_jacobian(&state.qddot),
        });
        Self { state, quadratic }
    }
}

struct Local {
    p: Matrix6xX<f64>,
    u: Vector6<f64>,
    v: Vector6<f64>,
    a: Vector6<f64>,
}

#[derive(Clone)]
struct Accum {
    r: DVector<f64>,
    jac: Option<JacAccum>,
}

#[derive(Clone)]
struct JacAccum {
    mass: DMatrix<f64>,
    damping: DMatrix<f64>,
    convective: DMatrix<f64>,
    stiffness: DMatrix<f64>,
}

impl Accum {
    fn zeros(m: usize, jac: bool) -> Self {
        Self {
            r: DVector::zeros(m),
            jac: jac.then(|| JacAccum {
                mass: DMatrix::zeros(m, m),
                damping: DMatrix::zeros(m, m),
                convective: DMatrix::zeros(m, m),
                stiffness: DMatrix::zeros(m, m),
            }),
        }
    }

    fn add(&mut self, other: &Accum) {
        self.r += &other.r;
        if let (Some(a), Some(b)) = (&mut self.jac, &other.jac) {
            a.mass += &b.mass;
            a.damping += &b.damping;
            a.convective += &b.convective;
            a.stiffness += &b.stiffness;
        }
    }
}

pub struct ReducedModel {
    structure: Arc<Structure>,
    mapping: Mapping,
    sampling: Sampling,
    terms: TermSelection,
    blocks: Vec<ElementBlock>,
    all_ids: Vec<usize>,
    unit_weights: Vec<f64>,
    /// `Φᵀl`
    load_linear: DVector<f64>,
    /// `(Ωᵀl)_ik`, so that `P_Γᵀl = Φᵀl + (Ωᵀl) q`.
    load_quadratic: Option<DMatrix<f64>>,
    gathers: AtomicU64,
}

impl ReducedModel {
    pub fn new(
        structure: Arc<Structure>,
        mapping: Mapping,
        sampling: Sampling,
        terms: TermSelection,
    ) -> Result<Self> {
        if mapping.n() != structure.n_dofs() {
            return Err(Error::DimensionMismatch {
                what: "mapping rows",
                expected: structure.n_dofs(),
                found: mapping.n(),
            });
        }
        let mesh = structure.mesh();
        let phi = mapping.linear_part();
        let omega = match &mapping {
            Mapping::Linear(_) => None,
            Mapping::Quadratic(qm) => Some(qm.omega_packed()),
        };
        let rows_of = |src: &DMatrix<f64>, dofs: &[Option<usize>; ELEMENT_DOFS]| {
            Matrix6xX::from_fn(src.ncols(), |i, k| dofs[i].map_or(0.0, |g| src[(g, k)]))
        };
        let blocks = mesh
            .all_element_dofs()
            .iter()
            .map(|dofs| ElementBlock {
                phi: rows_of(phi, dofs),
                omega: omega.map(|o| rows_of(o, dofs)),
            })
            .collect();
        let l = &structure.load().spatial;
        let load_linear = phi.tr_mul(l);
        let load_quadratic = omega.map(|o| unpack_pairs(mapping.dim(), &o.tr_mul(l)));
        let n_e = structure.n_elements();
        let model = Self {
            mapping,
            sampling: Sampling::Full,
            terms,
            blocks,
            all_ids: (0..n_e).collect(),
            unit_weights: vec![1.0; n_e],
            load_linear,
            load_quadratic,
            gathers: AtomicU64::new(0),
            structure,
        };
        model.with_sampling(sampling)
    }

    /// Unsampled model: every term summed over the whole mesh.
    pub fn full(structure: Arc<Structure>, mapping: Mapping) -> Result<Self> {
        Self::new(structure, mapping, Sampling::Full, TermSelection::ALL)
    }

    pub fn with_sampling(mut self, sampling: Sampling) -> Result<Self> {
        if let Sampling::Reduced(mesh) = &sampling {
            mesh.validate()?;
            if mesh.n_elements != self.structure.n_elements() {
                return Err(Error::DimensionMismatch {
                    what: "reduced mesh element count",
                    expected: self.structure.n_elements(),
                    found: mesh.n_elements,
                });
            }
        }
        self.sampling = sampling;
        Ok(self)
    }

    pub fn with_terms(mut self, terms: TermSelection) -> Self {
        self.terms = terms;
        self
    }

    pub fn dim(&self) -> usize {
        self.mapping.dim()
    }

    pub fn mapping(&self) -> &Mapping {
        &self.mapping
    }

    pub fn structure(&self) -> &Arc<Structure> {
        &self.structure
    }

    pub fn sampling(&self) -> &Sampling {
        &self.sampling
    }

    pub fn terms(&self) -> TermSelection {
        self.terms
    }

    /// Number of elements evaluated for the sampled terms.
    pub fn active_elements(&self) -> usize {
        match &self.sampling {
            Sampling::Full => self.structure.n_elements(),
            Sampling::Reduced(mesh) => mesh.len(),
        }
    }

    /// Element-local DOF values gathered since construction or the last reset.
    pub fn gather_count(&self) -> u64 {
        self.gathers.load(Ordering::Relaxed)
    }

    pub fn reset_gather_count(&self) {
        self.gathers.store(0, Ordering::Relaxed);
    }

    fn check_state(&self, s: &ReducedState) -> Result<()> {
        let m = self.dim();
        for (what, v) in [
            ("reduced displacement", &s.q),
            ("reduced velocity", &s.qdot),
            ("reduced acceleration", &s.qddot),
        ] {
            if v.len() != m {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: m,
                    found: v.len(),
                });
            }
        }
        Ok(())
    }

    /// `(ids, weights, terms)` for the sampled and the exactly summed parts.
    fn parts(&self) -> Vec<(&[usize], &[f64], TermSelection)> {
        match &self.sampling {
            Sampling::Full => vec![(&self.all_ids, &self.unit_weights, TermSelection::ALL)],
            Sampling::Reduced(mesh) => {
                let mut parts = vec![(&mesh.elements[..], &mesh.weights[..], self.terms)];
                let rest = self.terms.complement();
                if !rest.is_empty() {
                    parts.push((&self.all_ids, &self.unit_weights, rest));
                }
                parts
            }
        }
    }

    /// Element set and weights on which a single term is evaluated.
    fn set_for(&self, pick: impl Fn(TermSelection) -> bool) -> (&[usize], &[f64]) {
        match &self.sampling {
            Sampling::Reduced(mesh) if pick(self.terms) => (&mesh.elements, &mesh.weights),
            _ => (&self.all_ids, &self.unit_weights),
        }
    }

    fn local(&self, e: usize, kin: &Kinematics) -> Local {
        self.gathers
            .fetch_add(ELEMENT_DOFS as u64, Ordering::Relaxed);
        let block = &self.blocks[e];
        let s = kin.state;
        match (&block.omega, &kin.quadratic) {
            (Some(om), Some(k)) => {
                let p = &block.phi + om * &k.t_q;
                let u = &block.phi * &s.q + om * &k.half_sq;
                let v = &p * &s.qdot;
                let a = &p * &s.qddot + om * &k.s_qdot;
                Local { p, u, v, a }
            }
            _ => Local {
                u: &block.phi * &s.q,
                v: &block.phi * &s.qdot,
                a: &block.phi * &s.qddot,
                p: block.phi.clone(),
            },
        }
    }

    fn sum_chunk(
        &self,
        ids: &[usize],
        weights: &[f64],
        terms: TermSelection,
        kin: &Kinematics,
        jac: bool,
    ) -> Result<Accum> {
        let kernel = self.structure.kernel();
        let mut acc = Accum::zeros(self.dim(), jac);
        for (&e, &w) in ids.iter().zip(weights) {
            let loc = self.local(e, kin);
            let me = kernel.mass(e);
            let ce = kernel.damping(e);
            let mut h = Vector6::zeros();
            if terms.inertial {
                h += me * loc.a;
            }
            if terms.damping {
                h += ce * loc.v;
            }
            let mut ke = None;
            if terms.internal {
                let (fe, k) = if jac {
                    let (fe, k) = kernel.force_and_tangent(e, &loc.u);
                    (fe, Some(k))
                } else {
                    (kernel.internal_force(e, &loc.u), None)
                };
                if !fe.iter().all(|x| x.is_finite()) {
                    return Err(Error::NonFinite { element: e });
                }
                h -= fe;
                ke = k;
            }
            acc.r += loc.p.tr_mul(&h) * w;
            let Some(j) = acc.jac.as_mut() else { continue };
            let pt = loc.p.transpose();
            let block_omega = self.blocks[e].omega.as_ref();
            let quad = kin.quadratic.as_ref();
            let mut inner = DMatrix::<f64>::zeros(ELEMENT_DOFS, self.dim());
            if terms.inertial {
                let mp = me * &loc.p;
                j.mass += &pt * &mp * w;
                if let (Some(om), Some(k)) = (block_omega, quad) {
                    let w_qdot = om * &k.t_qdot;
                    j.convective += &pt * (me * &w_qdot) * w;
                    inner += me * (om * &k.t_qddot);
                }
            }
            if terms.damping {
                j.damping += &pt * (ce * &loc.p) * w;
                if let (Some(om), Some(k)) = (block_omega, quad) {
                    inner += ce * (om * &k.t_qdot);
                }
            }
            if let Some(k) = ke {
                inner += k * &loc.p;
            }
            j.stiffness += &pt * inner * w;
            if let Some(om) = block_omega {
                j.stiffness += unpack_pairs(self.dim(), &om.tr_mul(&h)) * w;
            }
        }
        Ok(acc)
    }

    /// Weighted element sum in fixed chunks, reduced in chunk order so the
    /// result does not depend on the thread count.
    fn sum_over(
        &self,
        ids: &[usize],
        weights: &[f64],
        terms: TermSelection,
        kin: &Kinematics,
        jac: bool,
    ) -> Result<Accum> {
        if ids.len() <= CHUNK {
            return self.sum_chunk(ids, weights, terms, kin, jac);
        }
        let parts: Vec<Accum> = ids
            .par_chunks(CHUNK)
            .zip(weights.par_chunks(CHUNK))
            .map(|(i, w)| self.sum_chunk(i, w, terms, kin, jac))
            .collect::<Result<_>>()?;
        let mut total = Accum::zeros(self.dim(), jac);
        for p in &parts {
            total.add(p);
        }
        Ok(total)
    }

    fn evaluate(&self, state: &ReducedState, jac: bool) -> Result<Accum> {
        self.check_state(state)?;
        let kin = Kinematics::new(&self.mapping, state);
        let mut total = Accum::zeros(self.dim(), jac);
        for (ids, weights, terms) in self.parts() {
            total.add(&self.sum_over(ids, weights, terms, &kin, jac)?);
        }
        let p = self.structure.load().factor(state.t);
        if p != 0.0 {
            total.r -= self.projected_load(&state.q) * p;
            if let (Some(j), Some(lq)) = (total.jac.as_mut(), &self.load_quadratic) {
                j.stiffness -= lq * p;
            }
        }
        Ok(total)
    }

    /// `P_Γ(q)ᵀ l`.
    fn projected_load(&self, q: &DVector<f64>) -> DVector<f64> {
        match &self.load_quadratic {
            Some(lq) => &self.load_linear + lq * q,
            None => self.load_linear.clone(),
        }
    }

    pub fn residual(&self, state: &ReducedState) -> Result<DVector<f64>> {
        Ok(self.evaluate(state, false)?.r)
    }

    pub fn jacobians(&self, state: &ReducedState) -> Result<ReducedJacobians> {
        let acc = self.evaluate(state, true)?;
        let j = acc.jac.expect("requested");
        Ok(ReducedJacobians {
            residual: acc.r,
            dq: j.stiffness,
            dqdot: &j.damping + &j.convective * 2.0,
            dqddot: j.mass,
        })
    }

    pub fn reduced_operators(&self, state: &ReducedState) -> Result<ReducedOperators> {
        let j = self.evaluate(state, true)?.jac.expect("requested");
        Ok(ReducedOperators {
            mass: j.mass,
            damping: j.damping + j.convective,
            stiffness: j.stiffness,
        })
    }

    /// `(Γ(q), P_Γ q̇, P_Γ q̈ + Ω:(q̇⊗q̇))` in full coordinates.
    pub fn lift(&self, state: &ReducedState) -> Result<(DVector<f64>, DVector<f64>, DVector<f64>)> {
        self.mapping.lift(&state.q, &state.qdot, &state.qddot)
    }

    /// `Σ_{e∈E} ξ_e P_eᵀ h_e` over the sampled set only.
    pub fn hyper_force(&self, state: &ReducedState) -> Result<DVector<f64>> {
        let Sampling::Reduced(mesh) = &self.sampling else {
            return Err(Error::EmptyReducedMesh);
        };
        self.check_state(state)?;
        let kin = Kinematics::new(&self.mapping, state);
        Ok(self
            .sum_over(&mesh.elements, &mesh.weights, self.terms, &kin, false)?
            .r)
    }

    /// `P_eᵀ h_e` for every element of the mesh with the selected terms,
    /// in element order.
    pub fn element_projections(&self, state: &ReducedState) -> Result<Vec<DVector<f64>>> {
        self.check_state(state)?;
        let kin = Kinematics::new(&self.mapping, state);
        (0..self.structure.n_elements())
            .into_par_iter()
            .with_min_len(CHUNK)
            .map(|e| Ok(self.sum_chunk(&[e], &[1.0], self.terms, &kin, false)?.r))
            .collect()
    }

    fn weighted_sum(
        &self,
        (ids, weights): (&[usize], &[f64]),
        state: &ReducedState,
        f: impl Fn(usize, &Local) -> f64,
    ) -> f64 {
        let kin = Kinematics::new(&self.mapping, state);
        ids.iter()
            .zip(weights)
            .map(|(&e, &w)| w * f(e, &self.local(e, &kin)))
            .sum()
    }

    pub fn kinetic_energy(&self, state: &ReducedState) -> f64 {
        let kernel = self.structure.kernel();
        self.weighted_sum(self.set_for(|t| t.inertial), state, |e, l| {
            kernel.kinetic_energy(e, &l.v)
        })
    }

    pub fn strain_energy(&self, state: &ReducedState) -> f64 {
        let kernel = self.structure.kernel();
        self.weighted_sum(self.set_for(|t| t.internal), state, |e, l| {
            kernel.strain_energy(e, &l.u)
        })
    }

    pub fn dissipation(&self, state: &ReducedState) -> f64 {
        let kernel = self.structure.kernel();
        self.weighted_sum(self.set_for(|t| t.damping), state, |e, l| {
            kernel.dissipation(e, &l.v)
        })
    }

    /// `Γ̇ᵀ f_ext(t) = p(t) q̇ᵀ P_Γᵀ l`.
    pub fn external_power(&self, state: &ReducedState) -> f64 {
        let p = self.structure.load().factor(state.t);
        if p == 0.0 {
            return 0.0;
        }
        p * state.qdot.dot(&self.projected_load(&state.q))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::mapping::{pair_count, LinearBasis, QuadraticManifold};
    use crate::fe::element::{Rayleigh, Section, VonKarmanFrame};
    use crate::fe::load::{uniform_transverse_load, LoadCase, LoadFunction};
    use crate::fe::mesh::{EndSupport, Mesh};
    use crate::hyper::reduced_mesh::Provenance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn strip(n_e: usize, left: EndSupport, right: EndSupport) -> Arc<Structure> {
        let mesh = Mesh::strip(30.0, n_e, left, right).unwrap();
        let section = Section::plate_strip(70_000.0, 0.3, 2.7e-9, 10.0, 0.5);
        let kernel = VonKarmanFrame::new(
            &mesh,
            section,
            Rayleigh {
                alpha: 3.0,
                beta: 2e-5,
            },
        )
        .unwrap();
        let load = LoadCase::new(
            uniform_transverse_load(&mesh, 0.2),
            LoadFunction::Sinusoidal {
                amplitude: 1.5,
                omega: 40.0,
            },
        );
        Arc::new(Structure::new(mesh, kernel, load).unwrap())
    }

    fn random_manifold(
        rng: &mut ChaCha8Rng,
        n: usize,
        m: usize,
        omega_scale: f64,
    ) -> QuadraticManifold {
        let phi = DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
        let omega = DMatrix::from_fn(n, pair_count(m), |_, _| {
            omega_scale * rng.random_range(-1.0..1.0)
        });
        QuadraticManifold::new(phi, omega).unwrap()
    }

    fn random_state(rng: &mut ChaCha8Rng, m: usize, scale: f64) -> ReducedState {
        let mut v = || DVector::from_fn(m, |_, _| scale * rng.random_range(-1.0..1.0));
        ReducedState::new(v(), v() * 50.0, v() * 2500.0, 0.013)
    }

    fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
    }

    /// `P_Γᵀ [M Γ̈ + C Γ̇ − f(Γ) − f_ext]` with globally assembled operators.
    fn dense_residual(s: &Structure, mapping: &Mapping, st: &ReducedState) -> DVector<f64> {
        let (u, v, a) = mapping.lift(&st.q, &st.qdot, &st.qddot).unwrap();
        let p = mapping.tangent(&st.q).unwrap();
        let m = s.mass().to_dense();
        let c = s.damping().to_dense();
        let h = m * a + c * v - s.internal_force(&u).unwrap() - s.load().external_force(st.t);
        p.tr_mul(&h)
    }

    fn all_elements(n_e: usize, weights: Vec<f64>, terms: TermSelection) -> ReducedMesh {
        ReducedMesh {
            n_elements: n_e,
            elements: (0..n_e).collect(),
            weights,
            tau: 0.0,
            residual: 0.0,
            provenance: Provenance {
                n_t: 0,
                terms,
                hash: String::new(),
            },
        }
    }

    #[test]
    fn zero_state_without_load_has_zero_residual() {
        let s = strip(3, EndSupport::Pinned, EndSupport::Pinned);
        let s = Arc::new(
            Structure::clone(&s)
                .with_load(LoadCase::none(s.n_dofs()))
                .unwrap(),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let qm = random_manifold(&mut rng, s.n_dofs(), 2, 0.1);
        let model = ReducedModel::full(s, Mapping::Quadratic(qm)).unwrap();
        assert_eq!(
            model.residual(&ReducedState::zeros(2)).unwrap(),
            DVector::zeros(2)
        );
    }

    #[test]
    fn residual_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (n_e, left) in [(1, EndSupport::Free), (5, EndSupport::Pinned)] {
            let s = strip(n_e, left, EndSupport::Free);
            let mapping = Mapping::Quadratic(random_manifold(&mut rng, s.n_dofs(), 2, 0.3));
            let model = ReducedModel::full(s.clone(), mapping.clone()).unwrap();
            for _ in 0..5 {
                let st = random_state(&mut rng, 2, 0.5);
                let r = model.residual(&st).unwrap();
                let oracle = dense_residual(&s, &mapping, &st);
                assert!(
                    (&r - &oracle).norm() <= 1e-12 * oracle.norm(),
                    "{r} vs {oracle}"
                );
            }
        }
    }

    #[test]
    fn linear_mapping_reduces_to_projected_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = strip(4, EndSupport::Pinned, EndSupport::Clamped);
        let v = DMatrix::from_fn(s.n_dofs(), 3, |_, _| rng.random_range(-1.0..1.0));
        let mapping = Mapping::Linear(LinearBasis::new(v.clone()).unwrap());
        let model = ReducedModel::full(s.clone(), mapping).unwrap();
        let st = random_state(&mut rng, 3, 0.4);
        let m = s.mass().to_dense();
        let c = s.damping().to_dense();
        let h = &m * &v * &st.qddot + &c * &v * &st.qdot
            - s.internal_force(&(&v * &st.q)).unwrap()
            - s.load().external_force(st.t);
        let oracle = v.tr_mul(&h);
        assert!((model.residual(&st).unwrap() - &oracle).norm() <= 1e-12 * oracle.norm());

        let flat = QuadraticManifold::flat(v);
        let as_manifold = ReducedModel::full(s, Mapping::Quadratic(flat)).unwrap();
        let r_flat = as_manifold.residual(&st).unwrap();
        assert!((r_flat - &oracle).norm() <= 1e-12 * oracle.norm());
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = strip(4, EndSupport::Pinned, EndSupport::Pinned);
        let mapping = Mapping::Quadratic(random_manifold(&mut rng, s.n_dofs(), 3, 0.3));
        let full = ReducedModel::full(s.clone(), mapping.clone()).unwrap();
        let mesh = ReducedMesh {
            n_elements: 4,
            elements: vec![0, 2, 3],
            weights: vec![1.7, 0.4, 2.2],
            tau: 0.0,
            residual: 0.0,
            provenance: Provenance {
                n_t: 0,
                terms: TermSelection::INTERNAL,
                hash: String::new(),
            },
        };
        let hyper = ReducedModel::new(s, mapping, Sampling::Reduced(mesh), TermSelection::INTERNAL)
            .unwrap();
        for model in [&full, &hyper] {
            for _ in 0..5 {
                let st = random_state(&mut rng, 3, 0.5);
                let j = model.jacobians(&st).unwrap();
                // r is quadratic in q̇ and affine in q̈, so wide central steps are exact there.
                let fd = |pick: fn(&mut ReducedState) -> &mut DVector<f64>, step: f64| {
                    let mut out = DMatrix::zeros(3, 3);
                    for k in 0..3 {
                        let mut sp = st.clone();
                        let mut sm = st.clone();
                        let h = step * pick(&mut sp)[k].abs().max(1.0);
                        pick(&mut sp)[k] += h;
                        pick(&mut sm)[k] -= h;
                        let col = (model.residual(&sp).unwrap() - model.residual(&sm).unwrap())
                            / (2.0 * h);
                        out.set_column(k, &col);
                    }
                    out
                };
                assert!(rel(&j.dq, &fd(|s| &mut s.q, 1e-5)) < 1e-6);
                assert!(rel(&j.dqdot, &fd(|s| &mut s.qdot, 0.1)) < 1e-6);
                assert!(rel(&j.dqddot, &fd(|s| &mut s.qddot, 0.1)) < 1e-6);
            }
        }
    }

    #[test]
    fn operators_at_rest_and_without_velocity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = strip(6, EndSupport::Pinned, EndSupport::Pinned);
        let qm = random_manifold(&mut rng, s.n_dofs(), 2, 0.3);
        let phi = qm.phi().clone();
        let model = ReducedModel::full(s.clone(), Mapping::Quadratic(qm)).unwrap();
        let ops = model.reduced_operators(&ReducedState::zeros(2)).unwrap();
        let oracle = phi.transpose() * s.mass().to_dense() * &phi;
        assert!(rel(&ops.mass, &oracle) < 1e-13);

        let mut st = random_state(&mut rng, 2, 0.5);
        st.qdot.fill(0.0);
        let ops = model.reduced_operators(&st).unwrap();
        let p = model.mapping().tangent(&st.q).unwrap();
        let oracle = p.transpose() * s.damping().to_dense() * &p;
        assert!(rel(&ops.damping, &oracle) < 1e-12);
    }

    #[test]
    fn unit_weights_on_all_elements_reproduce_full_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = strip(5, EndSupport::Pinned, EndSupport::Pinned);
        let mapping = Mapping::Quadratic(random_manifold(&mut rng, s.n_dofs(), 2, 0.3));
        let full = ReducedModel::full(s.clone(), mapping.clone()).unwrap();
        for terms in [TermSelection::ALL, TermSelection::INTERNAL] {
            let mesh = all_elements(5, vec![1.0; 5], terms);
            let hyper =
                ReducedModel::new(s.clone(), mapping.clone(), Sampling::Reduced(mesh), terms)
                    .unwrap();
            let st = random_state(&mut rng, 2, 0.5);
            let a = full.residual(&st).unwrap();
            let b = hyper.residual(&st).unwrap();
            assert!((&a - &b).norm() <= 1e-13 * a.norm());
        }
        let mesh = all_elements(5, vec![1.0; 5], TermSelection::ALL);
        let hyper = ReducedModel::new(
            s.clone(),
            mapping,
            Sampling::Reduced(mesh),
            TermSelection::ALL,
        )
        .unwrap();
        let st = random_state(&mut rng, 2, 0.5);
        let unloaded = ReducedState {
            t: 0.0,
            ..st.clone()
        };
        let h = hyper.hyper_force(&st).unwrap();
        assert!((&h - full.residual(&unloaded).unwrap()).norm() <= 1e-13 * h.norm());
        assert!(matches!(
            full.hyper_force(&st),
            Err(Error::EmptyReducedMesh)
        ));
    }

    #[test]
    fn hyper_force_gathers_only_sampled_elements() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = strip(40, EndSupport::Pinned, EndSupport::Pinned);
        let mapping = Mapping::Quadratic(random_manifold(&mut rng, s.n_dofs(), 2, 0.3));
        let mesh = ReducedMesh {
            n_elements: 40,
            elements: vec![3, 17, 30],
            weights: vec![5.0, 9.0, 7.0],
            tau: 0.01,
            residual: 0.0,
            provenance: Provenance {
                n_t: 0,
                terms: TermSelection::ALL,
                hash: String::new(),
            },
        };
        let model =
            ReducedModel::new(s, mapping, Sampling::Reduced(mesh), TermSelection::ALL).unwrap();
        model.reset_gather_count();
        model.hyper_force(&random_state(&mut rng, 2, 0.5)).unwrap();
        assert_eq!(model.gather_count(), 3 * ELEMENT_DOFS as u64);
        model.reset_gather_count();
        model.residual(&random_state(&mut rng, 2, 0.5)).unwrap();
        assert_eq!(model.gather_count(), 3 * ELEMENT_DOFS as u64);
    }
}
