use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A matrix that should be positive definite is numerically singular.
    #[error("numerical error: {what} (condition estimate {condition:e})")]
    Numerical { what: String, condition: f64 },

    /// A caller-side contract was broken, e.g. a phase vector off the unit circle.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::UnknownExperiment(_) => 3,
            Error::Config(_) | Error::Json(_) => 4,
            Error::Io(_) | Error::Csv(_) => 5,
            _ => 1,
        }
    }
}
