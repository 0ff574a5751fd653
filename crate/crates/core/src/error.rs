use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid input at row {row}, column {col}: {value}")]
    InvalidInput { row: usize, col: usize, value: f64 },

    #[error("degenerate denominator: {0}")]
    DegenerateDenominator(String),

    #[error("no real root: discriminant {discriminant:e} below tolerance")]
    NoRealRoot { discriminant: f64 },

    #[error("degenerate root: linear coefficient {linear:e} is not positive")]
    DegenerateRoot { linear: f64 },

    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("iteration left the domain: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("standardization needs at least two rows")]
    StandardizationDegenerate,

    #[error("layer {layer} is dead: every activation is zero")]
    DeadLayer { layer: usize },

    #[error("label matrix is not one-hot: {0}")]
    LabelFormat(String),

    #[error("dataset: {0}")]
    Dataset(String),

    #[error("cannot stratify: class {class} has {count} instance(s), need at least 2")]
    Stratification { class: usize, count: usize },

    #[error("model format: {0}")]
    Format(String),

    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    Checksum { stored: u32, computed: u32 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
