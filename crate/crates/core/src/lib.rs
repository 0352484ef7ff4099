//! SE(3)-bi-equivariant assembly of two point clouds.
//!
//! The pipeline extracts key points from each cloud with a shared
//! SE(3)-transformer, merges them into a 6-D cloud, runs
//! SE(3)×SE(3)-transformer layers on it and projects the pooled features
//! onto a rigid motion. With untrained weights the output already satisfies
//! bi-, swap- and scale-equivariance, which the audit in [`assembly`]
//! measures.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar type for the common cases.

pub mod assembly;
pub mod equi_kernel;
pub mod error;
pub mod geometry_io;
pub mod layers;
pub mod params;
pub mod rep_theory;
pub mod scalar;
pub mod tensor_field;

pub use error::{BitrError, Result};
pub use scalar::Real;

pub type Transform = tensor_field::RigidTransform<f64>;
pub type Transform32 = tensor_field::RigidTransform<f32>;
pub type Cloud = tensor_field::PointCloud<f64>;
pub type Cloud32 = tensor_field::PointCloud<f32>;
pub type Field = tensor_field::TensorField<f64>;
pub type Field32 = tensor_field::TensorField<f32>;
pub type Model = assembly::BitrModel<f64>;
pub type Model32 = assembly::BitrModel<f32>;
