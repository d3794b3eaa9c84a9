use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("activation cache does not match model: {0}")]
    Cache(String),

    #[error("non-finite gradient in layer {layer}")]
    NonFiniteGradient { layer: usize },

    #[error("non-finite loss at epoch {epoch}, batch {batch} ({model})")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        model: &'static str,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid label: {0}")]
    Label(String),

    #[error("at least two classes are required, got {0}")]
    DegenerateClasses(usize),

    #[error("degenerate schedule: total_epochs - warmup = {span} (needs >= 2)")]
    DegenerateSchedule { span: i64 },

    #[error("dataset already carries corrupted labels; corruption must start from clean labels")]
    AlreadyCorrupted,

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("probing requires a model with at least one hidden layer")]
    ProbeUnsupported,

    #[error("dataset does not match the model: {0}")]
    DatasetMismatch(String),

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
