use risim_core::geometry::Violation;
use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
    #[error("scenario has {} violation(s)", .0.len())]
    Violations(Vec<Violation>),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] risim_core::Error),
}

impl CliError {
    pub fn io(path: impl std::fmt::Display, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_string(),
            source,
        }
    }

    /// Process exit status: 2 config error, 3 scenario violations, 4 I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Violations(_) | CliError::Core(risim_core::Error::InvalidScenario(_)) => 3,
            CliError::Io { .. } | CliError::Core(risim_core::Error::Io(_)) => 4,
            _ => 2,
        }
    }

    pub fn violations(&self) -> &[Violation] {
        match self {
            CliError::Violations(v) | CliError::Core(risim_core::Error::InvalidScenario(v)) => v,
            _ => &[],
        }
    }
}
