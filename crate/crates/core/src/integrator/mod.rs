//! Implicit Newmark time integration of full and reduced models, energy
//! audits and snapshot storage.

pub mod energy;
pub mod newmark;
pub mod snapshots;
pub mod system;

pub use energy::{energy_audit, EnergyLedger};
pub use newmark::{initial_acceleration, integrate, NewmarkParams, Trajectory};
pub use system::{DenseLu, EnergyModel, JacobianWeights, LinearSolver, SecondOrderSystem};
