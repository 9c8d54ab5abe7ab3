use std::io;
use std::path::PathBuf;

pub type Result<T, E = KwsError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum KwsError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] kws_core::Error),
}

impl KwsError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        KwsError::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        KwsError::Format { path: path.into(), msg: msg.into() }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        KwsError::Usage(msg.into())
    }

    /// 2 for bad input or configuration, 3 for failures while computing.
    pub fn exit_code(&self) -> i32 {
        use kws_core::Error as E;
        match self {
            KwsError::Io { .. } | KwsError::Format { .. } | KwsError::Usage(_) => 2,
            KwsError::Core(e) => match e {
                E::Config(_) | E::UnknownModel(_) | E::Dataset(_) | E::InsufficientNoise { .. } | E::Label { .. } => 2,
                _ => 3,
            },
        }
    }
}
