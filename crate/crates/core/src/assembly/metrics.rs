use serde::{Deserialize, Serialize};

use crate::scalar::{to_f64, Real};
use crate::tensor_field::RigidTransform;

/// Isotropic rotation error in degrees and Euclidean translation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rotation_deg: f64,
    pub translation: f64,
}

pub fn metrics<T: Real>(g: &RigidTransform<T>, gt: &RigidTransform<T>) -> Metrics {
    let cos = to_f64(((g.r * gt.r.transpose()).trace() - T::one()) / (T::one() + T::one()));
    Metrics {
        rotation_deg: cos.clamp(-1.0, 1.0).acos().to_degrees(),
        translation: to_f64((gt.t - g.t).norm()),
    }
}

/// `‖rᵀ r_gt − I‖²_F + ‖t_gt − t‖²`.
pub fn loss<T: Real>(g: &RigidTransform<T>, gt: &RigidTransform<T>) -> T {
    let rot = (g.r.transpose() * gt.r - nalgebra::Matrix3::identity()).norm_squared();
    rot + (gt.t - g.t).norm_squared()
}
