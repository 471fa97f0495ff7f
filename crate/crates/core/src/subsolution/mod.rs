//! Subsolution certification: closed-form maximal eigenvalues, the strict
//! margin of the relaxed flux below the energy target, and plane-wave
//! candidates `(v, F)` with `div v = 0`, `∂t v + div F = 0`, `F` traceless.

mod candidate;
mod certify;
mod eigen;

pub use candidate::{
    divergence_defect, pairing, Envelope, PlaneWave, SubsolutionCandidate, WaveShape,
};
pub use certify::{
    max_amplitude_search, subsolution_margin, subsolution_margin_with, AmplitudeSearch,
    CertificationReport, MarginSample, SearchStatus, SnapshotMargin, Verdict, STRICT_TOL,
};
pub use eigen::{
    lambda_max_packed, lambda_max_sym, relaxation_inequality_check, relaxation_slack,
    SYMMETRY_TOL,
};

use thiserror::Error;

use crate::field::FieldError;

#[derive(Debug, Error)]
pub enum SubsolutionError {
    #[error("matrix: {0}")]
    Matrix(String),
    #[error("wave candidate: {0}")]
    Wave(String),
    #[error("cadence mismatch: {0}")]
    Cadence(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}
