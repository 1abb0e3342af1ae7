use thiserror::Error;

/// Errors reported by the library. Contract violations (dimension
/// mismatches between a model and a query point) panic instead; callers
/// that accept external data are expected to validate shapes up front.
#[derive(Debug, Error)]
pub enum FhError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("training data contains fewer than two classes")]
    SingleClass,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("class {class} has {count} samples, need at least {min} to split")]
    ClassTooSmall {
        class: usize,
        count: usize,
        min: usize,
    },

    #[error("row {row}: {msg}")]
    BadRow { row: u64, msg: String },

    #[error("bootstrap for member {member} kept missing a class after {retries} redraws")]
    DegenerateBootstrap { member: usize, retries: usize },

    #[error("config: {0}")]
    Config(String),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FhError>;
