use std::f64::consts::PI;

use nalgebra::{Matrix3, Quaternion, Rotation3, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BitrError, Result};
use crate::scalar::{lit, Real};
use crate::tensor_field::RigidTransform;

/// Generator behind every seeded routine: ChaCha with 8 rounds.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Which rotations `random_rigid` may return.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationScope {
    /// Haar-uniform over SO(3).
    Uniform,
    /// Uniform axis, angle uniform in `[0, degrees]`.
    MaxAngle(f64),
}

/// Uniform unit vector.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi = rng.random_range(0.0..2.0 * PI);
    let s = (1.0 - z * z).max(0.0).sqrt();
    Vector3::new(s * phi.cos(), s * phi.sin(), z)
}

/// Haar-uniform rotation from a uniformly distributed unit quaternion.
pub fn random_rotation<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Matrix3<T> {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    let u3: f64 = rng.random();
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let q = Quaternion::new(
        b * (2.0 * PI * u3).cos(),
        a * (2.0 * PI * u2).sin(),
        a * (2.0 * PI * u2).cos(),
        b * (2.0 * PI * u3).sin(),
    );
    let r = UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner();
    r.map(lit)
}

pub fn random_rigid_with<R: Rng + ?Sized>(
    rng: &mut R,
    scope: RotationScope,
    translation_scale: f64,
) -> Result<RigidTransform<f64>> {
    if !(translation_scale >= 0.0) {
        return Err(BitrError::InvalidArgument(format!(
            "translation scale must be non-negative, got {translation_scale}"
        )));
    }
    let r = match scope {
        RotationScope::Uniform => random_rotation(rng),
        RotationScope::MaxAngle(deg) => {
            let axis = random_unit_vector(rng);
            let angle = rng.random_range(0.0..=deg.abs()).to_radians();
            Rotation3::from_scaled_axis(axis * angle).into_inner()
        }
    };
    let t = if translation_scale > 0.0 {
        let radius = translation_scale * rng.random::<f64>().cbrt();
        random_unit_vector(rng) * radius
    } else {
        Vector3::zeros()
    };
    Ok(RigidTransform { r, t })
}

/// Random rigid motion, translation uniform in the ball of radius
/// `translation_scale`.
pub fn random_rigid(
    seed: u64,
    scope: RotationScope,
    translation_scale: f64,
) -> Result<RigidTransform<f64>> {
    random_rigid_with(&mut seeded_rng(seed), scope, translation_scale)
}
