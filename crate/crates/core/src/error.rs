use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A user-facing condition on the model (growth bounds, parameter signs) failed.
    #[error("{field}: {condition}")]
    Condition { field: String, condition: String },
    #[error("singular linear system: {0}")]
    Singular(String),
    #[error("point is off the constraint: relative mass error {0:.3e}")]
    OffConstraint(f64),
    #[error("shooting failed: {0}")]
    Shooting(String),
    #[error("grid resolution insufficient: {0}")]
    Resolution(String),
    #[error("fiber maximization failed: {0}")]
    Fiber(String),
    #[error("inadmissible input: {0}")]
    Inadmissible(String),
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(format!("{} at line {} column {}", e, e.line(), e.column()))
    }
}
