use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("inconsistent boundary description: signed measure {value} outside [0, 1]")]
    InconsistentBoundary { value: f64 },

    #[error("degenerate region parameters: {0}")]
    DegenerateParameter(String),

    #[error("bounds are only defined outside the indifference zone (theta = {theta}, epsilon = {epsilon})")]
    UnsupportedRegion { theta: f64, epsilon: f64 },

    #[error("insufficient data: need {needed} samples, have {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("degenerate sample: zero sample variance")]
    DegenerateSample,

    #[error("no stage size up to {limit} satisfies the sample size inequality; epsilon too small")]
    EpsilonTooSmall { limit: u64 },

    #[error("calibration failed at zeta = {zeta}: bound at theta0 = {phi_theta0}, mirror bound = {phi_mirror}")]
    CalibrationFailed {
        zeta: f64,
        phi_theta0: f64,
        phi_mirror: f64,
    },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("invalid session state: {0}")]
    State(String),

    #[error("integrity check failed: {0}")]
    Integrity(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("plan error: {0}")]
    Plan(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Schema(e.to_string())
    }
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
