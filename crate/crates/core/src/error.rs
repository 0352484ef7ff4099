use std::path::PathBuf;

use thiserror::Error;

use crate::rep_theory::BiDegree;

pub type Result<T, E = BitrError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum BitrError {
    #[error("degree {degree} exceeds the supported maximum {max}")]
    DegreeOutOfRange { degree: usize, max: usize },

    #[error("matrix is not a rotation (orthogonality error {orthogonality:.3e}, det {det:.6})")]
    NotARotation { orthogonality: f64, det: f64 },

    #[error("zero-length vector where a direction was required")]
    ZeroVector,

    #[error("degree {j} violates the triangle inequality for ({o}, {i})")]
    TriangleViolation { o: usize, i: usize, j: usize },

    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),

    #[error("field has no block of degree {0}")]
    MissingDegree(BiDegree),

    #[error("scale factor must be positive, got {0}")]
    NonPositiveScale(f64),

    #[error("neighbourhood size {k} is invalid for {points} points")]
    InvalidNeighborCount { k: usize, points: usize },

    #[error("degenerate spectrum: singular values {singular_values:?} violate sigma2 > sigma3")]
    DegenerateSpectrum { singular_values: [f64; 3] },

    #[error("under-determined registration: {points} corresponded points (need at least 3)")]
    UnderDetermined { points: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("feature channel mismatch: {0}")]
    FeatureChannelMismatch(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unknown point cloud format: {0}")]
    UnknownFormat(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("model document: {0}")]
    ModelFormat(String),

    #[error("complete matching requires a swap-tied model")]
    NotSwapTied,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
