use std::path::PathBuf;

use crate::epochset::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed manifest {path}: {source}")]
    Manifest {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("unsupported format_version {0} (expected 1)")]
    UnsupportedVersion(u32),

    #[error("unsupported {field} tag {found:?} (expected {expected:?})")]
    UnsupportedTag {
        field: &'static str,
        found: String,
        expected: &'static str,
    },

    #[error("dimension mismatch: manifest implies {expected} bytes, data file has {actual}")]
    DimensionMismatch { expected: u64, actual: u64 },

    #[error("checksum mismatch: manifest {expected}, data file {actual}")]
    ChecksumMismatch { expected: String, actual: String },

    #[error("invalid epoch set: {}", format_violations(.0))]
    Validation(Vec<Violation>),

    #[error("analysis window [{start}, {end}) exceeds trial bounds of {n_samples} samples")]
    WindowOutOfBounds {
        start: i64,
        end: i64,
        n_samples: usize,
    },

    #[error("channel {0:?} not present")]
    ChannelNotFound(String),

    #[error("class {0:?} not present")]
    ClassNotFound(String),

    #[error("band {lo}-{hi} Hz is not below Nyquist ({nyquist} Hz)")]
    BandAboveNyquist { lo: f64, hi: f64, nyquist: f64 },

    #[error("window of {n_samples} samples is shorter than 3 cycles of {center_hz} Hz")]
    WindowTooShort { n_samples: usize, center_hz: f64 },

    #[error("index out of range: {what} {index} (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("FastICA did not converge after {iterations} iterations")]
    IcaNotConverged { iterations: usize },

    #[error("covariance is rank deficient (eigenvalue ratio {ratio:e})")]
    RankDeficient { ratio: f64 },

    #[error("need exactly 2 classes, found {0:?}")]
    ClassCount(Vec<String>),

    #[error("class {class:?} has {count} trials, need at least {needed}")]
    TooFewTrials {
        class: String,
        count: usize,
        needed: usize,
    },

    #[error("fewer than 2 distinct feature rows")]
    DegenerateFeatures,

    #[error("no weak learner beats chance on the training set")]
    NoWeakLearner,

    #[error("feature count mismatch: model expects {expected}, got {actual}")]
    FeatureMismatch { expected: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
