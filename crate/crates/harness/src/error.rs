use std::path::PathBuf;

use sclab_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("stage `{stage}` failed ({params}): {source}")]
    Stage {
        stage: String,
        params: String,
        #[source]
        source: CoreError,
    },
    #[error("{context} ({}): {source}", path.display())]
    Io {
        context: &'static str,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("run interrupted after {completed} rows; rerun to resume")]
    Interrupted { completed: usize },
}

impl HarnessError {
    pub fn io(context: &'static str, path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            context,
            path: path.into(),
            source,
        }
    }

    pub fn stage(stage: &str, params: impl Into<String>, source: CoreError) -> Self {
        Self::Stage {
            stage: stage.to_string(),
            params: params.into(),
            source,
        }
    }

    /// Process exit code: 2 validation, 3 numerical accuracy, 4 capability, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => 2,
            Self::Stage { source, .. } => match source {
                CoreError::Capability(_) => 4,
                CoreError::Accuracy(_) | CoreError::Resolution { .. } | CoreError::Conditioning(_) => 3,
                CoreError::Validation(_)
                | CoreError::Domain(_)
                | CoreError::Contract(_)
                | CoreError::Range(_)
                | CoreError::EmptyWindow => 2,
            },
            Self::Io { .. } | Self::Interrupted { .. } => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
