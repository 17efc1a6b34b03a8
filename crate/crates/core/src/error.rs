use thiserror::Error;

/// Errors raised by the simulation kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("pump kind `{0}` cannot be evaluated pointwise")]
    UnsupportedPump(&'static str),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("zero retrieval probability; nothing to post-select on")]
    NoRetrieval,

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("g13 = {0} is in the classical regime (must exceed 1)")]
    ClassicalRegime(f64),

    #[error("fit failed: {0}")]
    FitFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be finite, got {value}")))
    }
}

pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    ensure_finite(name, value)?;
    if value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be > 0, got {value}")))
    }
}

pub(crate) fn ensure_non_negative(name: &str, value: f64) -> Result<()> {
    ensure_finite(name, value)?;
    if value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be >= 0, got {value}")))
    }
}

pub(crate) fn ensure_unit_interval(name: &str, value: f64) -> Result<()> {
    ensure_finite(name, value)?;
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must lie in [0, 1], got {value}")))
    }
}
