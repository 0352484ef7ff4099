use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{BitrError, Result};
use crate::rep_theory::check_rotation;
use crate::scalar::{to_f64, Real};

/// Element `(r, t)` of SE(3), acting as `x -> r x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform<T: Real> {
    pub r: Matrix3<T>,
    pub t: Vector3<T>,
}

impl<T: Real> RigidTransform<T> {
    pub fn identity() -> Self {
        RigidTransform {
            r: Matrix3::identity(),
            t: Vector3::zeros(),
        }
    }

    /// Validated constructor; `r` must be a rotation.
    pub fn new(r: Matrix3<T>, t: Vector3<T>) -> Result<Self> {
        check_rotation(&r)?;
        Ok(RigidTransform { r, t })
    }

    pub fn from_rotation(r: Matrix3<T>) -> Result<Self> {
        Self::new(r, Vector3::zeros())
    }

    pub fn from_translation(t: Vector3<T>) -> Self {
        RigidTransform {
            r: Matrix3::identity(),
            t,
        }
    }

    #[inline]
    pub fn apply(&self, x: &Vector3<T>) -> Vector3<T> {
        self.r * x + self.t
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        RigidTransform {
            r: self.r * other.r,
            t: self.r * other.t + self.t,
        }
    }

    pub fn inverse(&self) -> Self {
        let rt = self.r.transpose();
        RigidTransform { r: rt, t: -(rt * self.t) }
    }

    pub fn to_homogeneous(&self) -> Matrix4<T> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.r);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.t);
        m
    }

    pub fn from_homogeneous(m: &Matrix4<T>) -> Result<Self> {
        let bottom = m.fixed_view::<1, 4>(3, 0);
        let expected = [T::zero(), T::zero(), T::zero(), T::one()];
        if bottom.iter().zip(expected).any(|(a, b)| *a != b) {
            return Err(BitrError::InvalidArgument(
                "homogeneous matrix must end with row [0, 0, 0, 1]".into(),
            ));
        }
        Self::new(m.fixed_view::<3, 3>(0, 0).into(), m.fixed_view::<3, 1>(0, 3).into())
    }

    /// Re-expresses the transform in another scalar type.
    pub fn cast<U: Real>(&self) -> RigidTransform<U> {
        RigidTransform {
            r: self.r.map(|x| crate::scalar::lit(to_f64(x))),
            t: self.t.map(|x| crate::scalar::lit(to_f64(x))),
        }
    }

    /// Row-major 4×4 array, the JSON form of a transform.
    pub fn to_rows(&self) -> [[f64; 4]; 4] {
        let h = self.to_homogeneous();
        std::array::from_fn(|i| std::array::from_fn(|j| to_f64(h[(i, j)])))
    }

    pub fn from_rows(rows: &[[f64; 4]; 4]) -> Result<Self> {
        let h = Matrix4::from_fn(|i, j| crate::scalar::lit(rows[i][j]));
        Self::from_homogeneous(&h)
    }
}

impl<T: Real> Default for RigidTransform<T> {
    fn default() -> Self {
        Self::identity()
    }
}

/// Standard homogeneous embedding of `g`.
pub fn homogeneous_matrix<T: Real>(g: &RigidTransform<T>) -> Matrix4<T> {
    g.to_homogeneous()
}

/// `g2 ∘ g1`.
pub fn compose<T: Real>(g2: &RigidTransform<T>, g1: &RigidTransform<T>) -> RigidTransform<T> {
    g2.compose(g1)
}

pub fn invert<T: Real>(g: &RigidTransform<T>) -> RigidTransform<T> {
    g.inverse()
}

/// Frobenius distance between homogeneous matrices.
pub fn relative_error<T: Real>(a: &RigidTransform<T>, b: &RigidTransform<T>) -> T {
    (a.to_homogeneous() - b.to_homogeneous()).norm()
}

/// Pair of rigid motions; `g1` acts on the source factor, `g2` on the reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiRigid<T: Real> {
    pub g1: RigidTransform<T>,
    pub g2: RigidTransform<T>,
}

impl<T: Real> BiRigid<T> {
    pub fn new(g1: RigidTransform<T>, g2: RigidTransform<T>) -> Self {
        BiRigid { g1, g2 }
    }

    pub fn identity() -> Self {
        BiRigid::new(RigidTransform::identity(), RigidTransform::identity())
    }

    pub fn compose(&self, other: &Self) -> Self {
        BiRigid::new(self.g1.compose(&other.g1), self.g2.compose(&other.g2))
    }

    pub fn swapped(&self) -> Self {
        BiRigid::new(self.g2, self.g1)
    }
}

/// Serialized form of a transform: `{"transform": [[..4..]; 4]}`, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformDoc {
    pub transform: [[f64; 4]; 4],
}

impl TransformDoc {
    pub fn from_transform<T: Real>(g: &RigidTransform<T>) -> Self {
        TransformDoc {
            transform: g.to_rows(),
        }
    }

    pub fn to_transform<T: Real>(&self) -> Result<RigidTransform<T>> {
        RigidTransform::from_rows(&self.transform)
    }
}

#[cfg(test)]
mod tests {
    use nalgebra::Rotation3;

    use super::*;

    fn sample() -> RigidTransform<f64> {
        let r = Rotation3::from_euler_angles(0.3, -1.2, 2.0).into_inner();
        RigidTransform::new(r, Vector3::new(1.0, -2.0, 0.5)).unwrap()
    }

    #[test]
    fn identity_is_i4() {
        assert_eq!(RigidTransform::<f64>::identity().to_homogeneous(), Matrix4::identity());
    }

    #[test]
    fn inverse_is_transpose_form() {
        let g = sample();
        let inv = invert(&g);
        assert_eq!(inv.r, g.r.transpose());
        assert_eq!(inv.t, -(g.r.transpose() * g.t));
        let e = relative_error(&compose(&inv, &g), &RigidTransform::identity());
        assert!(e < 1e-12);
        assert_eq!(relative_error(&g, &g), 0.0);
    }

    #[test]
    fn homogeneous_composition_matches_matrix_product() {
        let g = sample();
        let h = sample().inverse().compose(&RigidTransform::from_translation(Vector3::x()));
        let lhs = compose(&g, &h).to_homogeneous();
        let rhs = g.to_homogeneous() * h.to_homogeneous();
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn rejects_non_rotations() {
        assert!(RigidTransform::new(Matrix3::identity() * 2.0, Vector3::zeros()).is_err());
        let reflect = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(RigidTransform::new(reflect, Vector3::zeros()).is_err());
    }

    #[test]
    fn rows_round_trip() {
        let g = sample();
        let doc = TransformDoc::from_transform(&g);
        let text = serde_json::to_string(&doc).unwrap();
        let back: TransformDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_transform::<f64>().unwrap(), g);
    }
}
