//! Discrete energy balance of a stored trajectory.

use crate::error::{Error, Result};
use crate::integrator::newmark::Trajectory;
use crate::integrator::system::EnergyModel;

#[derive(Clone, Debug, Default)]
pub struct EnergyLedger {
    pub times: Vec<f64>,
    pub kinetic: Vec<f64>,
    pub potential: Vec<f64>,
    /// Cumulative external work, trapezoidal in time.
    pub external_work: Vec<f64>,
    /// Cumulative dissipated work `d ∫ D dt`, trapezoidal in time.
    pub dissipated_work: Vec<f64>,
    /// `Δ(T + V) − W_ext + W_dis` at every stored time.
    pub balance: Vec<f64>,
    /// Largest of `T + V`, `|W_ext|` and `W_dis` over the record.
    pub peak_energy: f64,
}

impl EnergyLedger {
    /// `max |balance| / peak_energy`; zero for a motionless record.
    pub fn max_normalized_residual(&self) -> f64 {
        if self.peak_energy == 0.0 {
            return 0.0;
        }
        self.balance.iter().fold(0.0f64, |m, b| m.max(b.abs())) / self.peak_energy
    }

    pub fn final_normalized_residual(&self) -> f64 {
        match self.balance.last() {
            Some(b) if self.peak_energy > 0.0 => b.abs() / self.peak_energy,
            _ => 0.0,
        }
    }
}

/// Evaluates the energy balance along `traj`; `d` scales the dissipation
/// functional into dissipated power (`d = 2` for Rayleigh damping).
pub fn energy_audit<S: EnergyModel>(system: &S, traj: &Trajectory, d: f64) -> Result<EnergyLedger> {
    if traj.is_empty() {
        return Err(Error::Format("energy audit of an empty trajectory".into()));
    }
    let n = traj.len();
    let mut ledger = EnergyLedger {
        times: traj.times.clone(),
        ..Default::default()
    };
    let mut p_ext = Vec::with_capacity(n);
    let mut p_dis = Vec::with_capacity(n);
    for k in 0..n {
        let (x, v, t) = (&traj.x[k], &traj.v[k], traj.times[k]);
        ledger.kinetic.push(system.kinetic_energy(x, v)?);
        ledger.potential.push(system.strain_energy(x)?);
        p_ext.push(system.external_power(x, v, t)?);
        p_dis.push(d * system.dissipation(x, v)?);
    }
    let e0 = ledger.kinetic[0] + ledger.potential[0];
    let (mut w_ext, mut w_dis) = (0.0, 0.0);
    for k in 0..n {
        if k > 0 {
            let h = traj.times[k] - traj.times[k - 1];
            w_ext += 0.5 * h * (p_ext[k - 1] + p_ext[k]);
            w_dis += 0.5 * h * (p_dis[k - 1] + p_dis[k]);
        }
        let e = ledger.kinetic[k] + ledger.potential[k];
        ledger.external_work.push(w_ext);
        ledger.dissipated_work.push(w_dis);
        ledger.balance.push(e - e0 - w_ext + w_dis);
        ledger.peak_energy = ledger.peak_energy.max(e).max(w_ext.abs()).max(w_dis);
    }
    Ok(ledger)
}
