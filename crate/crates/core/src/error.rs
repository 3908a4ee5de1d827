//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An atomic level or mode index is outside the declared space.
    #[error("index out of range: {0}")]
    InvalidIndex(String),

    /// Non-finite data or a failed dense linear-algebra step.
    #[error("numeric error: {0}")]
    NumericError(String),

    /// Two operators do not live on the same tensor space.
    #[error("operator space mismatch")]
    SpaceMismatch,

    /// Trigonometric polynomials with different frequency bases or spaces.
    #[error("trig polynomial mismatch: {0}")]
    Mismatch(&'static str),

    /// A nonzero frequency key realizes a value too close to zero, so the
    /// secular/oscillatory separation is ill-conditioned.
    #[error("near-resonant frequency keys: {}", keys.join(", "))]
    NearResonance { keys: Vec<String> },

    /// A zero-mean primitive was requested for a polynomial with a secular
    /// (zero-frequency) component; split the mean off first.
    #[error("polynomial has a secular (zero-frequency) term")]
    SecularTerm,

    /// Hamiltonian order coefficients are not Hermitian-valued.
    #[error("invalid Hamiltonian: {0}")]
    InvalidHamiltonian(String),

    /// Two laser schemes share the same detuning.
    #[error("duplicate detuning across schemes")]
    DuplicateDetuning,

    /// A laser scheme violates a structural constraint.
    #[error("invalid scheme: {0}")]
    InvalidScheme(String),

    /// Requested perturbative order has no closed-form implementation.
    #[error("unsupported perturbative order {0} (only 1 and 2 are implemented)")]
    UnsupportedOrder(usize),

    /// Integrator step too coarse for the declared fastest frequency.
    #[error("time step {dt} exceeds limit {limit} for the declared fastest frequency")]
    StepTooLarge { dt: f64, limit: f64 },

    /// A state vector that should be normalized is not.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// Run-configuration parse or schema failure.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::NearResonance { .. }
            | Error::DuplicateDetuning
            | Error::InvalidScheme(_)
            | Error::SecularTerm
            | Error::InvalidHamiltonian(_) => 3,
            Error::StepTooLarge { .. } => 4,
            _ => 1,
        }
    }
}
