//! Energy admissibility of the wild solutions: the pointwise residual of the
//! energy inequality, the worst-case window `T_w` on which it holds for every
//! perturbation below the speed bound, and the `L²` budget fixing `Λ(0)`.

mod budget;
mod residual;
mod window;

pub use budget::{
    budget_report, choose_lambda0, energy_matched_amplitude, lp_closeness, BudgetEntry,
    BudgetReport, LpCloseness, LpRoute,
};
pub use residual::{energy_gradient, energy_residual, velocity_bound, velocity_bounds};
pub use window::{
    first_nonempty_eps, wild_window, wild_window_with, window_from_bracket, EnergyWindow,
    EpsSearch, WindowOptions, WindowSample,
};

use thiserror::Error;

use crate::ansatz::AnsatzError;
use crate::field::FieldError;
use crate::subsolution::SubsolutionError;

#[derive(Debug, Error)]
pub enum AdmissibilityError {
    #[error("perturbation is not divergence-free (sup |div v| = {0:e})")]
    Divergence(f64),
    #[error("budget: {0}")]
    Budget(String),
    #[error("window: {0}")]
    Window(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Ansatz(#[from] AnsatzError),
    #[error(transparent)]
    Subsolution(#[from] SubsolutionError),
}
