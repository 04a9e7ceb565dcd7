use std::path::PathBuf;

/// Errors raised by the registration engine and its I/O helpers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("small-angle twist has |rot| = {0} rad, must be < 0.5")]
    SmallAngleViolation(f64),
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("cloud has {have} points, need at least {need}")]
    TooFewPoints { have: usize, need: usize },
    #[error("cloud has no normals")]
    MissingNormals,
    #[error("sample set is empty")]
    EmptySample,
    #[error("sample has {have} points, need at least {need}")]
    TooFewSamples { have: usize, need: usize },
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("no correspondences within the maximum distance")]
    NoCorrespondences,
    #[error("normal equations are rank deficient (min/max singular value {0:e})")]
    RankDeficient(f64),
    #[error("no input frames")]
    EmptyInput,
    #[error("timestamp {stamp} does not follow previous timestamp {last}")]
    NonMonotonicTimestamp { stamp: f64, last: f64 },
    #[error("no ground-truth pose within {max_dt} s of stamp {stamp}")]
    Unassociable { stamp: f64, max_dt: f64 },
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }
}
