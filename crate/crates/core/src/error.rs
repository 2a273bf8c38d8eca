use std::path::PathBuf;

/// Errors produced anywhere in the matching pipeline.
///
/// Every variant maps onto a stable numeric code (see [`Error::code`]) that the
/// C interface and the CLI exit status reuse.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("i/o error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed manifest {}: {reason}", .path.display())]
    Manifest { path: PathBuf, reason: String },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("checksum mismatch: manifest says {expected}, blob hashes to {actual}")]
    Checksum { expected: String, actual: String },

    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },

    #[error("row {row} has zero norm")]
    ZeroRow { row: usize },

    #[error("embeddings carry no labels")]
    Unlabeled,

    #[error("invalid labels: {0}")]
    InvalidLabels(String),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("centered kernel is singular (trace {trace:e})")]
    SingularKernel { trace: f64 },

    #[error("kernel kind {kernel} is incompatible with the {spec} distortion")]
    KindMismatch { kernel: &'static str, spec: &'static str },

    #[error("matrix is asymmetric (max deviation {deviation:e})")]
    Asymmetric { deviation: f64 },

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable numeric code, distinct per failure class. Zero is reserved for success.
    pub fn code(&self) -> i32 {
        match self {
            Error::MissingFile(_) => 1,
            Error::Io { .. } => 2,
            Error::Manifest { .. } => 3,
            Error::ShapeMismatch(_) => 4,
            Error::Checksum { .. } => 5,
            Error::NonFinite { .. } => 6,
            Error::ZeroRow { .. } => 7,
            Error::Unlabeled => 8,
            Error::InvalidLabels(_) => 9,
            Error::OutOfRange(_) => 10,
            Error::SingularKernel { .. } => 11,
            Error::KindMismatch { .. } => 12,
            Error::Asymmetric { .. } => 13,
            Error::TooLarge(_) => 14,
            Error::Config(_) => 15,
            Error::InvalidPermutation(_) => 16,
            Error::Json(_) => 17,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path)
        } else {
            Error::Io { path, source }
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
