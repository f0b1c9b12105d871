use std::path::PathBuf;

/// Errors of the command layer.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable, malformed or out-of-range configuration.
    #[error("config error: {0}")]
    Config(String),
    /// Reading or writing a file failed.
    #[error("io error on {path}: {source}")]
    Io {
        /// File involved.
        path: PathBuf,
        /// Underlying error.
        #[source]
        source: std::io::Error,
    },
    /// A solver failed or a run did not reach its goal.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    /// Process exit code: 2 for configuration problems, 3 for numerical
    /// failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<bdglab_core::Error> for CliError {
    fn from(e: bdglab_core::Error) -> Self {
        use bdglab_core::Error as E;
        match e {
            E::InvalidLattice { .. }
            | E::Parameter(_)
            | E::Shape(_)
            | E::OffLattice { .. }
            | E::GridMismatch { .. } => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

/// Result alias for the command layer.
pub type Result<T> = std::result::Result<T, CliError>;
