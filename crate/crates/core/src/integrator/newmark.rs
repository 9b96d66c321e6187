//! Implicit Newmark integration with Newton iterations on the acceleration.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::integrator::system::{JacobianWeights, LinearSolver, SecondOrderSystem};

/// Correction below which Newton is considered stagnated at round-off.
const STAGNATION: f64 = 1e-14;
/// Correction accepted as converged once the residual has stopped decreasing.
const STALLED_STEP: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewmarkParams {
    pub gamma: f64,
    pub beta: f64,
    pub dt: f64,
    /// Residual reduction relative to the first Newton iterate.
    pub newton_tol: f64,
    pub max_newton: usize,
}

impl NewmarkParams {
    /// Average-acceleration scheme (`γ = ½`, `β = ¼`).
    pub fn average_acceleration(dt: f64) -> Self {
        Self {
            gamma: 0.5,
            beta: 0.25,
            dt,
            newton_tol: 1e-9,
            max_newton: 20,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let stable = self.gamma >= 0.5 && self.beta >= 0.25 * (0.5 + self.gamma).powi(2) - 1e-15;
        if !(self.dt > 0.0 && self.dt.is_finite()) || !stable || self.max_newton == 0 {
            return Err(Error::Format(format!(
                "invalid Newmark parameters {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub x: Vec<DVector<f64>>,
    pub v: Vec<DVector<f64>>,
    pub a: Vec<DVector<f64>>,
    /// Newton iterations of every step (not only stored ones).
    pub newton_iterations: Vec<usize>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn push(&mut self, t: f64, x: &DVector<f64>, v: &DVector<f64>, a: &DVector<f64>) {
        self.times.push(t);
        self.x.push(x.clone());
        self.v.push(v.clone());
        self.a.push(a.clone());
    }
}

/// Solves `r(x, v, a, t) = 0` for `a` with `x = x_p + c_x a`, `v = v_p + c_v a`.
#[allow(clippy::too_many_arguments)]
fn newton<S: SecondOrderSystem>(
    system: &S,
    params: &NewmarkParams,
    step: usize,
    t: f64,
    xp: &DVector<f64>,
    vp: &DVector<f64>,
    a: &mut DVector<f64>,
    cx: f64,
    cv: f64,
) -> Result<usize> {
    let w = JacobianWeights {
        acceleration: 1.0,
        velocity: cv,
        displacement: cx,
    };
    let mut r0 = 0.0;
    let mut last = f64::INFINITY;
    let a_start = a.norm();
    for it in 0..params.max_newton {
        let x = xp + &*a * cx;
        let v = vp + &*a * cv;
        let (r, factor) = system.linearize(&x, &v, a, t, w)?;
        let rn = r.norm();
        if !rn.is_finite() {
            return Err(Error::NewtonDivergence { step, residual: rn });
        }
        if it == 0 {
            r0 = rn;
        }
        let stalled = rn > 0.5 * last;
        last = rn;
        if rn <= params.newton_tol * r0 || rn == 0.0 {
            return Ok(it);
        }
        let da = factor.solve(&r)?;
        *a -= &da;
        let correction = da.norm();
        let scale = a.norm().max(a_start);
        // Acceleration whose displacement increment matches the state itself.
        let reach = if cx > 0.0 { x.norm() / cx } else { 0.0 };
        log::trace!(
            "step {step}: newton {it}, |r| {rn:.3e}, |Δa| {correction:.3e}, |a| {scale:.3e}"
        );
        if correction <= STAGNATION * scale.max(reach)
            || (stalled && correction <= STALLED_STEP * scale)
        {
            return Ok(it + 1);
        }
    }
    let x = xp + &*a * cx;
    let v = vp + &*a * cv;
    let rn = system.residual(&x, &v, a, t)?.norm();
    if rn <= params.newton_tol * r0 {
        return Ok(params.max_newton);
    }
    Err(Error::NewtonDivergence {
        step,
        residual: if r0 > 0.0 { last / r0 } else { last },
    })
}

/// Consistent initial acceleration from `r(x₀, ẋ₀, ẍ, t₀) = 0`.
pub fn initial_acceleration<S: SecondOrderSystem>(
    system: &S,
    params: &NewmarkParams,
    t0: f64,
    x0: &DVector<f64>,
    v0: &DVector<f64>,
) -> Result<DVector<f64>> {
    let mut a = DVector::zeros(system.dim());
    newton(system, params, 0, t0, x0, v0, &mut a, 0.0, 0.0)?;
    Ok(a)
}

/// Advances `n_steps` steps of size `params.dt` from `t0`, storing every
/// `output_stride`-th state plus the last one.
pub fn integrate<S: SecondOrderSystem>(
    system: &S,
    params: &NewmarkParams,
    t0: f64,
    n_steps: usize,
    x0: &DVector<f64>,
    v0: &DVector<f64>,
    output_stride: usize,
) -> Result<Trajectory> {
    params.validate()?;
    let n = system.dim();
    for (what, len) in [
        ("initial displacement", x0.len()),
        ("initial velocity", v0.len()),
    ] {
        if len != n {
            return Err(Error::DimensionMismatch {
                what,
                expected: n,
                found: len,
            });
        }
    }
    let stride = output_stride.max(1);
    let dt = params.dt;
    let (gamma, beta) = (params.gamma, params.beta);
    let mut x = x0.clone();
    let mut v = v0.clone();
    let mut a = initial_acceleration(system, params, t0, &x, &v)?;
    let mut traj = Trajectory::default();
    traj.push(t0, &x, &v, &a);
    for k in 1..=n_steps {
        let t = t0 + k as f64 * dt;
        let xp = &x + &v * dt + &a * ((0.5 - beta) * dt * dt);
        let vp = &v + &a * ((1.0 - gamma) * dt);
        let iterations = newton(
            system,
            params,
            k,
            t,
            &xp,
            &vp,
            &mut a,
            beta * dt * dt,
            gamma * dt,
        )?;
        x = xp + &a * (beta * dt * dt);
        v = vp + &a * (gamma * dt);
        traj.newton_iterations.push(iterations);
        if k % stride == 0 || k == n_steps {
            traj.push(t, &x, &v, &a);
        }
    }
    Ok(traj)
}
