use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = ReachError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ReachError {
    #[error("{what}: expected dimension {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{0}")]
    Network(String),

    #[error("unknown activation `{0}` (expected relu, sigmoid, tanh or identity)")]
    UnknownActivation(String),

    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("ordering violation at coordinate {coord}: lower {lower} > upper {upper}")]
    OrderingViolation { coord: usize, lower: f64, upper: f64 },

    #[error(
        "state left the box its frozen network bounds were computed on \
         (coordinate {coord}: state [{lower}, {upper}] vs valid [{valid_lower}, {valid_upper}]); \
         increase the partition count or shrink the actuation step"
    )]
    BoundsEscape {
        coord: usize,
        lower: f64,
        upper: f64,
        valid_lower: f64,
        valid_upper: f64,
    },

    #[error("frame {frame}, partition {partition}, sub-partition {subpartition}: {source}")]
    Branch {
        frame: usize,
        partition: usize,
        subpartition: usize,
        #[source]
        source: Box<ReachError>,
    },
}

impl ReachError {
    /// Strips branch wrappers.
    pub fn root(&self) -> &ReachError {
        match self {
            ReachError::Branch { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self.root(),
            ReachError::NonFinite(_)
                | ReachError::OrderingViolation { .. }
                | ReachError::BoundsEscape { .. }
        )
    }
}
