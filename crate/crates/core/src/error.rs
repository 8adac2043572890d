use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// One entry per violated parameter invariant.
    #[error("invalid parameters: {}", .0.join("; "))]
    InvalidParams(Vec<String>),

    #[error("non-finite matrix entry")]
    NonFinite,

    #[error("time {t} outside schedule range [0, {period}]")]
    OutOfRange { t: f64, period: f64 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("{what} did not converge (last delta {delta:e})")]
    NonConvergence { what: &'static str, delta: f64 },

    #[error("insufficient steps: {given} given, at least {required} required")]
    InsufficientSteps { given: usize, required: usize },

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("fit: {0}")]
    Fit(String),

    #[error("config: missing key {0}")]
    MissingKey(String),

    #[error("config: unknown key {0}")]
    UnknownKey(String),

    #[error("config line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Numerical failures as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::NonFinite | Error::Undefined(_)
        )
    }

    /// Short machine-readable tag, stable across releases.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "invalid_params",
            Error::NonFinite => "non_finite",
            Error::OutOfRange { .. } => "out_of_range",
            Error::InvalidSchedule(_) => "invalid_schedule",
            Error::NonConvergence { .. } => "non_convergence",
            Error::InsufficientSteps { .. } => "insufficient_steps",
            Error::Undefined(_) => "undefined",
            Error::Fit(_) => "fit",
            Error::MissingKey(_) => "missing_key",
            Error::UnknownKey(_) => "unknown_key",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
