//! Error taxonomy for the simulator.
//!
//! Errors fall into two classes that the CLI maps onto exit codes:
//!
//! * **configuration errors** — the request itself is malformed (bad
//!   parameters, mismatched dimensions, step sizes too coarse, protocols
//!   invoked without their preconditions). Exit code 2.
//! * **physics / numerical failures** — the request was well formed but the
//!   computation left its domain of validity (non-dispersive regime, norm
//!   drift beyond tolerance, unphysical states). Exit code 1.

use thiserror::Error;

/// All failure modes surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates a construction invariant (negative frequency,
    /// mismatched list lengths, non-normalized state, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two objects that must share a Hilbert space (or shape) do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Requested qutrit transition is not directly drivable or addressable
    /// (only g↔e and e↔f carry matrix elements in this model).
    #[error("unsupported transition: {0}")]
    UnsupportedTransition(String),

    /// A dispersive formula was requested at zero detuning.
    #[error("degenerate detuning: {0}")]
    DegenerateDetuning(String),

    /// A protocol precondition on the parameter set is violated (swap
    /// resonance, ratio condition, group separation, ...).
    #[error("misconfiguration: {0}")]
    Misconfiguration(String),

    /// The evolution step size is too coarse for the Hamiltonian's spectral
    /// range (max phase advance per step must stay below 0.5 rad).
    #[error("step size constraint violated: {0}")]
    StepBound(String),

    /// A selective-rotation segment was requested without a calibration.
    #[error("uncalibrated protocol: {0}")]
    Uncalibrated(String),

    /// Dressed-state identification failed: an eigenstate has no dominant
    /// bare component, so the system is outside the dispersive regime.
    #[error("non-dispersive regime: {0}")]
    NonDispersiveRegime(String),

    /// Numerical integration left tolerance (norm drift past 1e-6).
    #[error("integration failure: {0}")]
    IntegrationFailure(String),

    /// A quantum state or density matrix is unphysical beyond tolerance.
    #[error("invalid state: {0}")]
    InvalidState(String),
}

impl Error {
    /// Process exit code the CLI should use for this error:
    /// 2 for configuration errors, 1 for physics/numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_)
            | Error::DimensionMismatch(_)
            | Error::UnsupportedTransition(_)
            | Error::DegenerateDetuning(_)
            | Error::Misconfiguration(_)
            | Error::StepBound(_)
            | Error::Uncalibrated(_) => 2,
            Error::NonDispersiveRegime(_)
            | Error::IntegrationFailure(_)
            | Error::InvalidState(_) => 1,
        }
    }
}

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
