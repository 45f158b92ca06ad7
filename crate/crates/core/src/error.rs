use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside its admissible domain.
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },

    #[error("singular network equations at {frequency} Hz")]
    SingularSystem { frequency: f64 },

    /// The quantity sits below the numeric floor of the estimator.
    #[error("unmeasurable: {0}")]
    Unmeasurable(String),

    #[error("adaptive quadrature did not converge (estimated error {estimated_error:e})")]
    QuadratureNotConverged { estimated_error: f64 },

    #[error("integrator failure: {0}")]
    IntegratorUnstable(String),

    #[error("waveform spans {periods:.2} periods of its lowest component, at least {required} required")]
    WaveformTooShort { periods: f64, required: f64 },

    #[error("the wave-equation oracle is defined for lossless cables only (r_per_m = {0})")]
    LossyCable(f64),

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field,
            reason: reason.into(),
        }
    }

    /// True for failures of a numerical procedure rather than of the inputs.
    pub fn is_numeric_failure(&self) -> bool {
        matches!(
            self,
            Error::SingularSystem { .. }
                | Error::QuadratureNotConverged { .. }
                | Error::IntegratorUnstable(_)
                | Error::Unmeasurable(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Rejects NaN, infinities and values `<= 0`.
pub(crate) fn require_positive(field: &'static str, value: f64) -> Result<f64> {
    if !value.is_finite() {
        return Err(Error::invalid(field, format!("must be finite, got {value}")));
    }
    if value <= 0.0 {
        return Err(Error::invalid(field, format!("must be > 0, got {value}")));
    }
    Ok(value)
}

pub(crate) fn require_non_negative(field: &'static str, value: f64) -> Result<f64> {
    if !value.is_finite() {
        return Err(Error::invalid(field, format!("must be finite, got {value}")));
    }
    if value < 0.0 {
        return Err(Error::invalid(field, format!("must be >= 0, got {value}")));
    }
    Ok(value)
}
