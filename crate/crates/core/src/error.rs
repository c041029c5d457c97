use thiserror::Error;

#[derive(Debug, Error)]
pub enum CimError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported: {0}")]
    Capability(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("integration diverged at t = {t}")]
    Divergence { t: f64 },

    #[error("step size underflow at t = {t} (dt = {dt:e})")]
    Stiffness { t: f64, dt: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CimError>;
