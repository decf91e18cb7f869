use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the detection engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported format in `{path}`: {detail}")]
    UnsupportedFormat { path: PathBuf, detail: String },

    #[error("format error in `{path}`{}: {detail}", frame.map(|f| format!(" (frame {f})")).unwrap_or_default())]
    Format {
        path: PathBuf,
        frame: Option<u64>,
        detail: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch: expected {expected_rows}x{expected_cols}, got {rows}x{cols}")]
    ShapeMismatch {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("block ({row}, {col}) out of range for a {rows}x{cols} grid")]
    BlockOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("image {width}x{height} too small, need at least {min}x{min}")]
    ImageTooSmall {
        width: usize,
        height: usize,
        min: usize,
    },

    #[error("block volume of depth {depth} too shallow, need at least {min} frames")]
    VolumeTooShallow { depth: usize, min: usize },

    #[error("unsupported kernel `{0}`")]
    UnsupportedKernel(String),

    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("need samples of both classes")]
    SingleClass,

    #[error("non-finite value in feature vector of sample {sample}")]
    NonFiniteFeature { sample: usize },

    #[error("insufficient training data for class `{class}`: {got} samples, need at least {min}")]
    InsufficientData {
        class: String,
        got: usize,
        min: usize,
    },

    #[error("model file error: {0}")]
    ModelFormat(String),

    #[error("ground-truth span {start}..={end} outside video of {frames} frames")]
    SpanOutOfRange { start: u64, end: u64, frames: u64 },

    #[error("event at frame {frame} outside video of {frames} frames")]
    EventOutOfRange { frame: u64, frames: u64 },
}
