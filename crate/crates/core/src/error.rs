use std::path::PathBuf;

/// Errors raised across the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("weights sum to zero; cannot normalize")]
    AllZero,

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("vocabulary size mismatch: {left} vs {right}")]
    VocabMismatch { left: usize, right: usize },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("corpus has {len} tokens but order {order} needs more than {order}")]
    CorpusTooShort { len: usize, order: usize },

    #[error("symbol {0:?} is not in the vocabulary")]
    OutOfVocabulary(String),

    #[error("model assigns zero probability to token {token} at position {position}")]
    ZeroProbability { token: u32, position: usize },

    #[error("training set contains a single label class")]
    DegenerateLabels,

    #[error("both label classes are required")]
    SingleClass,

    #[error("decision threshold tau must lie in (0, 1), got {0}")]
    InvalidTau(f64),

    #[error("{0} diverges when eta_fp = 1")]
    Divergent(&'static str),

    #[error("reference sequence is empty")]
    EmptyReference,

    #[error("no prompts to benchmark")]
    EmptyPrompts,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
