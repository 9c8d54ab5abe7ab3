use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty buffer")]
    EmptyBuffer,

    #[error("insufficient noise: source clip has {available} samples, {requested} requested")]
    InsufficientNoise { available: usize, requested: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cutoff ordering violated: f1 = {f1} > f2 = {f2}")]
    CutoffOrder { f1: f64, f2: f64 },

    #[error("degenerate batch: batch statistics need at least 2 values per channel, got {values}")]
    DegenerateBatch { values: usize },

    #[error("label {label} out of range for {classes} classes")]
    Label { label: usize, classes: usize },

    #[error("backward called before forward")]
    MissingForward,

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("training diverged at epoch {epoch}, batch {batch}")]
    Divergence { epoch: usize, batch: usize },

    #[error("unknown model id `{0}`")]
    UnknownModel(String),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
