//! Periodic grids, spectral calculus, norms and barotropic pressure laws.

mod fields;
mod grid;
mod interp;
mod pressure;
pub mod reduce;
mod spectral;
pub mod wef;

pub use fields::{sym_index, sym_len, FlowState, ScalarField, SymTensorField, VectorField};
pub use grid::TorusGrid;
pub use interp::MonotoneCubic;
pub use pressure::{PressureKind, PressureLaw, PressureTable};
pub(crate) use pressure::integrate;
pub use spectral::{Spectral, SpectralMonitor};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("density {rho} outside the validity interval ({a}, {b})")]
    DensityOutOfRange { rho: f64, a: f64, b: f64 },
    #[error("invalid pressure law: {0}")]
    InvalidPressure(String),
    #[error("malformed WEF1 data: {0}")]
    Wef(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
