//! A desk-scale numerical laboratory for wild initial data of the
//! barotropic Euler system on the periodic box `[-1,1]^d`, `d = 2, 3`.
//!
//! The crate is organized bottom-up:
//!
//! * [`field`] holds the periodic grid, spectral calculus, norms, pressure
//!   laws and the `WEF1` snapshot format.
//! * [`solver`] integrates the conservative Euler system with a dealiased
//!   pseudo-spectral RK4 scheme and checks weak and energy formulations.
//! * [`ansatz`] builds the traceless flux `H`, the kinetic energy target `e`
//!   and the energy profile `Λ`.
//! * [`subsolution`] certifies subsolutions through closed-form maximal
//!   eigenvalues and generates plane-wave candidates.
//! * [`admissibility`] evaluates the pointwise energy residual, the wild
//!   window `T_w` and the `L²` budget for `Λ(0)`.
//! * [`io`] ties everything into reproducible runs driven by the CLI.

// `!(x > 0.0)` is the NaN-rejecting form used throughout input checks, and
// index loops mirror the tensor notation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod admissibility;
pub mod ansatz;
pub mod field;
pub mod io;
pub mod solver;
pub mod subsolution;

pub use admissibility::{AdmissibilityError, BudgetReport, EnergyWindow};
pub use ansatz::{AnsatzError, AnsatzFields, EnergyProfile};
pub use field::{
    FieldError, FlowState, PressureLaw, ScalarField, Spectral, SymTensorField, TorusGrid,
    VectorField,
};
pub use io::{ConfigError, ExperimentConfig, RunError};
pub use solver::{SmoothSolution, SolverConfig, SolverError};
pub use subsolution::{CertificationReport, SubsolutionCandidate, SubsolutionError};
