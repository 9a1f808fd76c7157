use thiserror::Error;

/// Errors raised by the library. Each variant maps to a stable `kind` string
/// used in the CLI's machine-readable error output.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("delta = (p-1-alpha)(p-1-beta) - qm vanishes")]
    DeltaZero,

    #[error("parameter hypothesis violated: {0}")]
    DomainViolation(String),

    #[error("parameters within the degeneracy band: {0}")]
    NearDegenerate(String),

    #[error("alpha >= p-1: no non-constant positive radial solutions exist")]
    DegenerateAlpha,

    #[error("state is not strictly positive: {0}")]
    NonPositiveState(String),

    #[error("step size underflow at r = {r:e}")]
    StepUnderflow { r: f64 },

    #[error("monitor {monitor} violated at r = {r:e} (margin {margin:e})")]
    MonitorViolation {
        monitor: &'static str,
        r: f64,
        margin: f64,
    },

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("quadrature breakdown: {0}")]
    QuadratureBreakdown(String),

    #[error("Picard iteration did not converge after {iterations} iterations (rho = {rho:e})")]
    NoConvergence { iterations: usize, rho: f64 },

    #[error("delta must be positive (got {0:e})")]
    DeltaNotPositive(f64),

    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),

    #[error("no non-constant positive radial solution: {0}")]
    NoSolutionRegime(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DeltaZero => "DeltaZero",
            Error::DomainViolation(_) => "DomainViolation",
            Error::NearDegenerate(_) => "NearDegenerate",
            Error::DegenerateAlpha => "DegenerateAlpha",
            Error::NonPositiveState(_) => "NonPositiveState",
            Error::StepUnderflow { .. } => "StepUnderflow",
            Error::MonitorViolation { .. } => "MonitorViolation",
            Error::InsufficientSamples(_) => "InsufficientSamples",
            Error::QuadratureBreakdown(_) => "QuadratureBreakdown",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::DeltaNotPositive(_) => "DeltaNotPositive",
            Error::RegimeMismatch(_) => "RegimeMismatch",
            Error::NoSolutionRegime(_) => "NoSolutionRegime",
            Error::Config(_) => "Config",
            Error::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
