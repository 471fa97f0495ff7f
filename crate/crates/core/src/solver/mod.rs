//! Local-in-time smooth solutions of the conservative barotropic Euler
//! system by a dealiased pseudo-spectral method with classical RK4.

mod energy;
mod integrate;
mod rhs;
mod weak;

pub use energy::{total_energy_profile, EnergySeries};
pub use integrate::{
    solve_smooth, Blowup, BlowupReason, NormSample, SmoothSolution, SolverConfig,
};
pub use rhs::{euler_rhs, EulerRhs};
pub use weak::{weak_residual, TestFunction, TestMode, TimeProfile, WeakForm};

use thiserror::Error;

use crate::field::FieldError;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("invalid test function: {0}")]
    TestFunction(String),
}
