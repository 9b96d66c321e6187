use nalgebra::{DMatrix, DVector, LU};

use crate::error::{Error, Result};
use crate::fe::skyline::SkylineLdl;
use crate::fe::sparse::SparseSymMatrix;
use crate::fe::structure::Structure;
use crate::rom::{ReducedModel, ReducedState};

pub trait LinearSolver {
    fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>>;
}

impl LinearSolver for SkylineLdl {
    fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(SkylineLdl::solve(self, rhs))
    }
}

pub struct DenseLu(LU<f64, nalgebra::Dyn, nalgebra::Dyn>);

impl DenseLu {
    pub fn new(a: DMatrix<f64>) -> Self {
        Self(a.lu())
    }
}

impl LinearSolver for DenseLu {
    fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        self.0.solve(rhs).ok_or(Error::Singular {
            context: "reduced Newton matrix",
            pivot: 0,
            value: 0.0,
        })
    }
}

/// Weights of the combined Jacobian `c_a ∂r/∂ẍ + c_v ∂r/∂ẋ + c_x ∂r/∂x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JacobianWeights {
    pub acceleration: f64,
    pub velocity: f64,
    pub displacement: f64,
}

/// Second-order residual `r(x, ẋ, ẍ, t) = 0`.
pub trait SecondOrderSystem {
    type Factor: LinearSolver;

    fn dim(&self) -> usize;

    fn residual(
        &self,
        x: &DVector<f64>,
        v: &DVector<f64>,
        a: &DVector<f64>,
        t: f64,
    ) -> Result<DVector<f64>>;

    /// Residual together with a factorization of the weighted Jacobian.
    fn linearize(
        &self,
        x: &DVector<f64>,
        v: &DVector<f64>,
        a: &DVector<f64>,
        t: f64,
        w: JacobianWeights,
    ) -> Result<(DVector<f64>, Self::Factor)>;
}

/// Energy functionals evaluated consistently with a system's residual.
pub trait EnergyModel {
    fn kinetic_energy(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<f64>;
    fn strain_energy(&self, x: &DVector<f64>) -> Result<f64>;
    /// Dissipation functional `D(ẋ)`.
    fn dissipation(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<f64>;
    /// Power of the external load, `u̇ᵀ f_ext(t)`.
    fn external_power(&self, x: &DVector<f64>, v: &DVector<f64>, t: f64) -> Result<f64>;
}

impl SecondOrderSystem for Structure {
    type Factor = SkylineLdl;

    fn dim(&self) -> usize {
        self.n_dofs()
    }

    fn residual(
        &self,
        x: &DVector<f64>,
        v: &DVector<f64>,
        a: &DVector<f64>,
        t: f64,
    ) -> Result<DVector<f64>> {
        let f = self.internal_force(x)?;
        Ok(self.mass().mul_vec(a) + self.damping().mul_vec(v) - f - self.load().external_force(t))
    }

    fn linearize(
        &self,
        x: &DVector<f64>,
        v: &DVector<f64>,
        a: &DVector<f64>,
        t: f64,
        w: JacobianWeights,
    ) -> Result<(DVector<f64>, SkylineLdl)> {
        let (f, k) = self.force_and_tangent(x)?;
        let r =
            self.mass().mul_vec(a) + self.damping().mul_vec(v) - f - self.load().external_force(t);
        let j = SparseSymMatrix::linear_combination(&[
            (w.acceleration, self.mass()),
            (w.velocity, self.damping()),
            (w.displacement, &k),
        ])?;
        Ok((r, SkylineLdl::factor(&j)?))
    }
}

impl EnergyModel for Structure {
    fn kinetic_energy(&self, _x: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        Ok(Structure::kinetic_energy(self, v))
    }

    fn strain_energy(&self, x: &DVector<f64>) -> Result<f64> {
        Structure::strain_energy(self, x)
    }

    fn dissipation(&self, _x: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        Ok(Structure::dissipation(self, v))
    }

    fn external_power(&self, _x: &DVector<f64>, v: &DVector<f64>, t: f64) -> Result<f64> {
        Ok(self.load().factor(t) * v.dot(&self.load().spatial))
    }
}

fn state(x: &DVector<f64>, v: &DVector<f64>, a: &DVector<f64>, t: f64) -> ReducedState {
    ReducedState::new(x.clone(), v.clone(), a.clone(), t)
}

impl SecondOrderSystem for ReducedModel {
    type Factor = DenseLu;

    fn dim(&self) -> usize {
        ReducedModel::dim(self)
    }

    fn residual(
        &self,
        x: &DVector<f64>,
        v: &DVector<f64>,
        a: &DVector<f64>,
        t: f64,
    ) -> Result<DVector<f64>> {
        ReducedModel::residual(self, &state(x, v, a, t))
    }

    fn linearize(
        &self,
        x: &DVector<f64>,
        v: &DVector<f64>,
        a: &DVector<f64>,
        t: f64,
        w: JacobianWeights,
    ) -> Result<(DVector<f64>, DenseLu)> {
        let j = self.jacobians(&state(x, v, a, t))?;
        let combined = j.dqddot * w.acceleration + j.dqdot * w.velocity + j.dq * w.displacement;
        Ok((j.residual, DenseLu::new(combined)))
    }
}

impl EnergyModel for ReducedModel {
    fn kinetic_energy(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        let z = DVector::zeros(x.len());
        Ok(ReducedModel::kinetic_energy(self, &state(x, v, &z, 0.0)))
    }

    fn strain_energy(&self, x: &DVector<f64>) -> Result<f64> {
        let z = DVector::zeros(x.len());
        Ok(ReducedModel::strain_energy(self, &state(x, &z, &z, 0.0)))
    }

    fn dissipation(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        let z = DVector::zeros(x.len());
        Ok(ReducedModel::dissipation(self, &state(x, v, &z, 0.0)))
    }

    fn external_power(&self, x: &DVector<f64>, v: &DVector<f64>, t: f64) -> Result<f64> {
        let z = DVector::zeros(x.len());
        Ok(ReducedModel::external_power(self, &state(x, v, &z, t)))
    }
}
