use thiserror::Error;

/// Errors raised by the tracking stack.
///
/// The variants partition failures by cause so callers (notably the CLI)
/// can map them to distinct exit statuses.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation
    /// (non-finite input, negative distance, non-positive time step, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// Tensor or matrix dimensions do not line up.
    #[error("shape error: {0}")]
    Shape(String),
    /// A configuration document could not be read. Positions are 1-based.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    /// A configuration value violates its documented invariant.
    #[error("config error: {0}")]
    Config(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {value}")))
    }
}
