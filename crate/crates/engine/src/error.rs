use std::path::PathBuf;

/// Failures of the batch commands, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Core(#[from] recall_core::Error),
}

pub type Result<T> = std::result::Result<T, EngineError>;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

impl EngineError {
    pub fn exit_code(&self) -> u8 {
        use recall_core::Error as E;
        match self {
            EngineError::Usage(_) => EXIT_USAGE,
            EngineError::Io { .. } | EngineError::Data(_) => EXIT_DATA,
            EngineError::Core(E::NonFinite(_) | E::Separation(_) | E::SingularHessian) => EXIT_NUMERICAL,
            EngineError::Core(_) => EXIT_DATA,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        EngineError::Io { path: path.into(), source }
    }
}
