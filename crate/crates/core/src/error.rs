use thiserror::Error;

/// Failures of the low-level geometry layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("arclength {s} outside [0, {length}]")]
    OutOfRange { s: f64, length: f64 },
}
