use std::path::{Path, PathBuf};

use idriftnet_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("InvalidConfig: {0}")]
    Config(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("IoFailure: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    /// 2 for anything the user can fix (usage, data, configuration), 3 for
    /// broken internal invariants.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Internal(_)
            | CliError::Core(CoreError::ShapeMismatch(_))
            | CliError::Core(CoreError::ModeCountMismatch { .. }) => 3,
            _ => 2,
        }
    }
}
