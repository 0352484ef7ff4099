use nalgebra::{Matrix3, Vector3};

use crate::error::{BitrError, Result};
use crate::rep_theory::BiDegree;
use crate::scalar::{from_usize, lit, to_f64, Real};
use crate::tensor_field::{pooled_vector, RigidTransform, TensorField};

/// Relative gap `σ2 − σ3` below which the projection is rejected.
pub const SPECTRAL_GAP_TOL: f64 = 1e-9;

/// Relative gap below which a projection is flagged as close to degenerate.
pub const SPECTRAL_GAP_WARN: f64 = 1e-6;

/// Rotation part and descending singular values of `a`.
fn project_parts<T: Real>(a: &Matrix3<T>) -> (Matrix3<T>, Vector3<T>) {
    let svd = a.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let u = Matrix3::from_columns(&order.map(|k| u.column(k).into_owned()));
    let vt = Matrix3::from_rows(&order.map(|k| vt.row(k).into_owned()));
    let sigma = Vector3::from_fn(|k, _| svd.singular_values[order[k]]);
    let mut d = Matrix3::identity();
    if (u * vt).determinant() < T::zero() {
        d[(2, 2)] = -T::one();
    }
    (u * d * vt, sigma)
}

fn degenerate<T: Real>(sigma: &Vector3<T>, rel: f64) -> bool {
    sigma[0] <= T::zero() || sigma[1] - sigma[2] <= sigma[0] * lit(rel)
}

/// Nearest rotation `U diag(1, 1, sign det(U Vᵀ)) Vᵀ`, which is unique
/// when the smallest singular value is simple.
pub fn svd_project<T: Real>(a: &Matrix3<T>) -> Result<Matrix3<T>> {
    let (r, sigma) = project_parts(a);
    if degenerate(&sigma, SPECTRAL_GAP_TOL) {
        return Err(BitrError::DegenerateSpectrum {
            singular_values: [0, 1, 2].map(|k| to_f64(sigma[k])),
        });
    }
    Ok(r)
}

/// [`svd_project`] without the uniqueness check; a rotation maps to itself.
pub fn svd_project_unchecked<T: Real>(a: &Matrix3<T>) -> Matrix3<T> {
    project_parts(a).0
}

/// Closed-form least-squares rigid motion taking `x[i]` to `y[i]`.
pub fn arun_solve<T: Real>(x: &[Vector3<T>], y: &[Vector3<T>]) -> Result<RigidTransform<T>> {
    if x.len() != y.len() {
        return Err(BitrError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(BitrError::UnderDetermined { points: x.len() });
    }
    let mx = mean(x);
    let my = mean(y);
    let corr = x
        .iter()
        .zip(y)
        .fold(Matrix3::zeros(), |acc, (a, b)| acc + (b - my) * (a - mx).transpose());
    let r = svd_project(&corr)?;
    Ok(RigidTransform { r, t: my - r * mx })
}

pub(crate) fn mean<T: Real>(x: &[Vector3<T>]) -> Vector3<T> {
    x.iter().fold(Vector3::zeros(), |acc, p| acc + p) / from_usize::<T>(x.len().max(1))
}

/// Output of the SE(3) projection with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct AssemblyResult<T: Real> {
    pub transform: RigidTransform<T>,
    /// Singular values of `r̂`, descending.
    pub singular_values: Vector3<T>,
    /// `σ2 − σ3` is within [`SPECTRAL_GAP_WARN`] of degenerate.
    pub near_degenerate: bool,
    pub r_hat: Matrix3<T>,
    pub t_x: Vector3<T>,
    pub t_y: Vector3<T>,
    pub keypoints_x: Vec<Vector3<T>>,
    pub keypoints_y: Vec<Vector3<T>>,
}

/// Arun-type projection of the pooled `(1,1)`, `(1,0)` and `(0,1)` features.
pub fn se3_project<T: Real>(
    f: &TensorField<T>,
    keypoints_x: &[Vector3<T>],
    keypoints_y: &[Vector3<T>],
) -> Result<AssemblyResult<T>> {
    let r_vec = pooled_vector(f, BiDegree::new(1, 1))?;
    let r_hat = Matrix3::from_column_slice(r_vec.as_slice());
    let t_x = Vector3::from_column_slice(pooled_vector(f, BiDegree::new(1, 0))?.as_slice());
    let t_y = Vector3::from_column_slice(pooled_vector(f, BiDegree::new(0, 1))?.as_slice());
    let (_, sigma) = project_parts(&r_hat);
    let r = svd_project(&r_hat)?;
    let t = (mean(keypoints_y) + t_y) - r * (mean(keypoints_x) + t_x);
    Ok(AssemblyResult {
        transform: RigidTransform { r, t },
        singular_values: sigma,
        near_degenerate: degenerate(&sigma, SPECTRAL_GAP_WARN),
        r_hat,
        t_x,
        t_y,
        keypoints_x: keypoints_x.to_vec(),
        keypoints_y: keypoints_y.to_vec(),
    })
}
