use std::path::PathBuf;

/// Errors surfaced by the command-line tool, each mapped to an exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Core(#[from] fourier_debias::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error("manifest serialization: {0}")]
    Json(#[from] serde_json::Error),
}

pub type CliResult<T> = Result<T, CliError>;

pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_OVERFLOW: i32 = 3;

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self::Usage(message.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Parse { .. } => EXIT_INVALID,
            Self::Core(e) => match e.root() {
                fourier_debias::Error::OverflowGuard { .. } => EXIT_OVERFLOW,
                _ => EXIT_INVALID,
            },
            Self::Io { .. } | Self::Csv(_) | Self::Json(_) => EXIT_RUNTIME,
        }
    }
}
