use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// `InvalidMeasure` and `InvalidArgument` describe malformed input; `Hypothesis` errors mean the
/// computation ran but the measure fails a structural requirement of the
/// diagnostic (for instance `|θ|` touching 1 away from the origin).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("precision exhausted: clamping deficit {deficit:e} exceeds {limit:e}")]
    PrecisionExhausted { deficit: f64, limit: f64 },

    #[error("diagnostic refused: {0}")]
    Refused(String),

    #[error("hypothesis failure: {0}")]
    Hypothesis(String),

    #[error("empty regime: {0}")]
    EmptyRegime(String),
}

impl Error {
    pub(crate) fn arg(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
