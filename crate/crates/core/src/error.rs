use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("total dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("subsystem index {index} out of range for {len} subsystems")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid subsystem list: {0}")]
    InvalidSites(String),

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dispersive approximation invalid: qubit frequency equals resonator frequency")]
    Resonance,

    #[error("integration needs {steps} steps, more than the cap of {cap}")]
    StepCap { steps: u64, cap: u64 },

    #[error("density matrix lost positivity: minimum eigenvalue {min_eigenvalue:.3e} after {elapsed_s:.3e} s")]
    Positivity { min_eigenvalue: f64, elapsed_s: f64 },

    #[error("unknown model tag `{0}`")]
    UnknownModel(String),

    #[error("gate targets site {site} but the sequence has {n_sites} sites")]
    SiteMismatch { site: usize, n_sites: usize },

    #[error("{0}")]
    Serialization(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
