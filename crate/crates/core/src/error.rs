use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{file}: line {line}, column {column}: {message}")]
    Parse {
        file: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("no vote lists")]
    NoVoteLists,

    #[error("duplicate legislator id `{0}`")]
    DuplicateId(String),

    #[error("legislator `{0}` appears in the vote file but not in the roster")]
    UnknownLegislator(String),

    #[error("model infeasible: only {retained} legislators have recorded Yes/No votes (need at least 3)")]
    ModelInfeasible { retained: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite value for parameter `{0}`")]
    NonFinite(String),

    #[error("complete separation detected: |coefficient| exceeded {0}")]
    Separation(f64),

    #[error("response has a single class; both 0 and 1 are required")]
    SingleClass,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("legislator sets differ (only in first: [{only_first}]; only in second: [{only_second}])")]
    MismatchedSets {
        only_first: String,
        only_second: String,
    },

    #[error("instance too large for exhaustive quadrature: {free} free parameters (max {max})")]
    InstanceTooLarge { free: usize, max: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Numerical failures (as opposed to bad input or configuration).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFinite(_) | Error::Separation(_))
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
