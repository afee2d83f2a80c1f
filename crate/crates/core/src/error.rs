use thiserror::Error;

use crate::models::ModelError;

pub type Result<T> = std::result::Result<T, Error>;

/// Which side of the point of interest a stencil member lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Below,
    Above,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::Below => f.write_str("-"),
            Side::Above => f.write_str("+"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("no semi-axial point on the {side} side along coordinate {direction}")]
    InsufficientStencil { direction: usize, side: Side },

    #[error("degenerate stencil: {0}")]
    DegenerateStencil(String),

    #[error("model evaluation failed at {point:?}: {source}")]
    ModelFailure {
        point: Vec<f64>,
        #[source]
        source: ModelError,
    },

    #[error("edge point {index} has {count} evaluated neighbours within delta (need at least 2)")]
    EmptyNeighborhood { index: usize, count: usize },

    #[error("training set contains a single class")]
    SingleClass,

    #[error("duplicate training point {0:?} carries conflicting labels")]
    ConflictingDuplicate(Vec<f64>),

    #[error("no labeled neighbour of class {0} within the variation radius")]
    MissingNeighbor(i8),

    #[error("initialization failed: {0}")]
    InitFailure(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed classifier record: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
