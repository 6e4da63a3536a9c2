use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("unsupported image format: {}", .0.display())]
    UnsupportedFormat(PathBuf),
    #[error("corrupt image {}: {reason}", path.display())]
    CorruptImage { path: PathBuf, reason: String },
    #[error("invalid image dimensions {rows}x{cols}: {reason}")]
    InvalidDimensions {
        rows: usize,
        cols: usize,
        reason: String,
    },
    #[error("non-finite pixel value at index {0}")]
    NonFinitePixel(usize),
    #[error("image {rows}x{cols} is too small: need at least {min}x{min}")]
    DimensionTooSmall {
        rows: usize,
        cols: usize,
        min: usize,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate reference image: subband {0} has no usable neighborhoods")]
    DegenerateReference(String),
    #[error("ATP requires at least one threshold")]
    EmptyThresholds,
    #[error("feature layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("training data contains a single class")]
    SingleClassData,
    #[error("pixel missing rate {0} outside [0, 1]")]
    InvalidRate(f64),
    #[error(
        "block {block_rows}x{block_cols} at ({row}, {col}) does not fit in {rows}x{cols} image"
    )]
    BlockTooLarge {
        block_rows: usize,
        block_cols: usize,
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("image has zero signal power")]
    ZeroSignalPower,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("missing class directory {}", .0.display())]
    MissingClassDirectory(PathBuf),
    #[error("no images found under {}", .0.display())]
    NoImagesFound(PathBuf),
    #[error("failed to load {} image(s): {}", .0.len(), summarize(.0))]
    LoadFailures(Vec<Error>),
    #[error("model was trained for feature layout {expected}, got {actual}")]
    LayoutHashMismatch { expected: String, actual: String },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

fn summarize(errors: &[Error]) -> String {
    errors
        .iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    /// Wraps an I/O failure on `path`; a missing file maps to [`Error::FileNotFound`].
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::FileNotFound(path)
        } else {
            Error::Io { path, source }
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping any context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}
