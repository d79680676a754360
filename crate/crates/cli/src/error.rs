use thiserror::Error;

/// Failures that map onto process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {field}: {message}")]
    Config { field: String, message: String },

    #[error("numerical instability at step {step}")]
    Unstable { step: usize },

    #[error("incomplete run: {0}")]
    Incomplete(String),

    #[error("unknown suite `{0}` (expected identities, spectral, gronwall, convergence or decay)")]
    UnknownSuite(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] wavedecay::Error),
}

impl CliError {
    pub fn config(field: &str, err: impl std::fmt::Display) -> Self {
        CliError::Config {
            field: field.to_string(),
            message: err.to_string(),
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::UnknownSuite(_) => 2,
            CliError::Unstable { .. } => 3,
            CliError::Incomplete(_) => 4,
            CliError::Io { .. } => 1,
            CliError::Core(e) => match e {
                wavedecay::Error::Unstable { .. } | wavedecay::Error::NonFinite { .. } => 3,
                _ => 2,
            },
        }
    }
}
