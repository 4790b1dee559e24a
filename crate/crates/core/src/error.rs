use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("row (sample {sample}, input {input}) sums to {sum}, not 1")]
    Normalization {
        sample: usize,
        input: usize,
        sum: f64,
    },

    #[error("non-finite or negative probability {value} at (sample {sample}, input {input}, class {class})")]
    NonFinite {
        sample: usize,
        input: usize,
        class: usize,
        value: f64,
    },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("duplicate index {0}")]
    DuplicateIndex(usize),

    #[error("empty batch")]
    EmptyBatch,

    #[error("{configurations} label configurations exceed the enumeration cap of {cap}")]
    CapExceeded { configurations: f64, cap: usize },

    #[error("requested {requested} items but only {available} are available")]
    BatchTooLarge { requested: usize, available: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("training diverged (seed {seed}, epoch {epoch}, loss {loss}) with config {config}")]
    Divergence {
        seed: u64,
        epoch: usize,
        loss: f64,
        config: String,
    },

    #[error("degenerate evidence: every hypothesis assigns zero likelihood to the data")]
    DegenerateEvidence,

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("idx format error in {path}: {message}")]
    Idx { path: PathBuf, message: String },

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error("trial {trial} aborted in round {round}: {source}")]
    Trial {
        trial: usize,
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
