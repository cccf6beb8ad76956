use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    /// The emitter does not scatter (zero drive), so a normalized quantity is undefined.
    #[error("no emission: {0}")]
    NoEmission(&'static str),

    #[error("grid too coarse: spacing {spacing:.3e} exceeds {limit:.3e} required for kernel width {width:.3e}")]
    Resolution { spacing: f64, limit: f64, width: f64 },

    #[error("instrument response support {support:.3e} s exceeds trace support {trace:.3e} s")]
    ResponseTooWide { support: f64, trace: f64 },

    #[error("integration error estimate {achieved:.3e} exceeds tolerance {tolerance:.3e}")]
    IntegrationTolerance { achieved: f64, tolerance: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("fit problem: {0}")]
    Fit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad input rather than numerical trouble.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::Unsupported(_)
                | Error::Empty(_)
                | Error::NoEmission(_)
                | Error::Parse { .. }
                | Error::Fit(_)
        )
    }
}
