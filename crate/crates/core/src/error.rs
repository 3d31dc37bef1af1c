use std::path::PathBuf;

/// Errors produced by the detection pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller passed data that violates a documented precondition.
    #[error("invalid input: {0}")]
    Input(String),

    /// A configuration value (or combination of values) is unusable.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A data file exists but its contents are not acceptable.
    #[error("{path}: {reason}")]
    Load { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn load(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Load {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
