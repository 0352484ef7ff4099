//! End-to-end assembly: key points, the bi-transformer, the SE(3)
//! projection, classical registration and the equivariance audit.

mod audit;
mod icp;
mod metrics;
mod model;
mod projection;

pub use audit::{equivariance_audit, AuditReport};
pub use icp::{icp_refine, IcpResult, IcpSettings};
pub use metrics::{loss, metrics, Metrics};
pub use model::{
    bitr_forward, complete_match, extract_keypoints, keypoint_weights, merge_pc, BiStage,
    BitrModel, ExtractorParams, KeyPoints, ModelConfig, ModelDoc, ScaleMode, Weights, SCHEMA_VERSION,
};
pub use projection::{
    arun_solve, se3_project, svd_project, svd_project_unchecked, AssemblyResult,
    SPECTRAL_GAP_TOL, SPECTRAL_GAP_WARN,
};
