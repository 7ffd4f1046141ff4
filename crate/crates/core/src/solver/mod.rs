//! Penalized Beris–Edwards solver with rigid colloids.

mod config;
mod ledger;
mod operators;
mod run;
mod state;
mod step;

pub use config::{
    BodySpec, FeedbackConfig, Horizon, InitialQ, InitialU, OutputConfig, Penalty, SimConfig, TimeStep,
    DEFAULT_LEDGER_TOLERANCE, DEFAULT_PENALTY,
};
pub use ledger::{EnergyLedger, LedgerRecord};
pub use operators::{
    elastic_energy, grad_lapl_energy, solve_q, solve_velocity, tri_laplacian, viscous_apply, weighted_strain,
};
pub use run::{
    auto_dt, run, sweep_delta, sweep_penalty, write_sweep_csv, RunReport, RunStatus, Simulation, SweepRow,
    SWEEP_HEADER,
};
pub use state::{energies, initial_bodies, initial_state, BodyEvent, SimState};
pub use step::{compute_h, step, step_q, step_u, StepReport, VelocityUpdate};

use crate::fields::FieldError;
use crate::rigid::RigidError;
use crate::tensor::TensorError;

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Rigid(#[from] RigidError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("time step {dt:e} exceeds the stability bound {bound:e}")]
    Cfl { dt: f64, bound: f64 },
    #[error("energy inequality violated at step {step} (residual {residual:e})")]
    LedgerViolation { step: usize, residual: f64 },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[cfg(test)]
mod tests;
