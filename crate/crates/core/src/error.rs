use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid value for `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("dimension mismatch: expected {expected} sites, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("site index {site} out of range for lattice of {len} sites")]
    SiteOutOfRange { site: usize, len: usize },

    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("both histograms are empty")]
    EmptyHistograms,

    #[error("histogram bin widths {0} and {1} cannot be mapped to a common grid")]
    IncompatibleBins(f64, f64),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}
