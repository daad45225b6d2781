use thiserror::Error;

use crate::geometry::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coincident points: {0}")]
    CoincidentPoints(&'static str),

    #[error("distance {distance} m is below the allowed minimum {minimum} m")]
    DistanceTooSmall { distance: f64, minimum: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("operation requires the {expected} environment")]
    WrongEnvironment { expected: &'static str },

    #[error("cluster set was drawn for the {actual:?} link, expected {expected:?}")]
    MismatchedClusterSet {
        expected: crate::clusters::LinkKind,
        actual: crate::clusters::LinkKind,
    },

    #[error("scenario has {} violation(s)", .0.len())]
    InvalidScenario(Vec<Violation>),

    #[error("empty realization stream")]
    EmptyStream,

    #[error("malformed dump: {0}")]
    MalformedDump(String),

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
}
