use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::error::{BitrError, Result};
use crate::scalar::{from_usize, Real};
use crate::tensor_field::PointCloud;

/// Indices of the `k` nearest points to `query` (brute force, ties by index).
pub fn nearest_indices<T: Real>(points: &[Vector3<T>], query: &Vector3<T>, k: usize) -> Vec<usize> {
    let mut order: Vec<(T, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| ((p - query).norm_squared(), i))
        .collect();
    let k = k.min(order.len());
    if k < order.len() {
        order.select_nth_unstable_by(k, |a, b| cmp_real(a.0, b.0).then(a.1.cmp(&b.1)));
        order.truncate(k);
    }
    order.sort_by(|a, b| cmp_real(a.0, b.0).then(a.1.cmp(&b.1)));
    order.into_iter().map(|(_, i)| i).collect()
}

fn cmp_real<T: Real>(a: T, b: T) -> std::cmp::Ordering {
    a.partial_cmp(&b).unwrap_or(std::cmp::Ordering::Equal)
}

/// Unit normals from the smallest-eigenvalue eigenvector of the covariance
/// of each point's `k` nearest neighbours (the point included). Each normal
/// points away from the cloud centroid; a point at the centroid gets the
/// orientation whose largest-magnitude component is positive.
pub fn estimate_normals<T: Real>(cloud: &PointCloud<T>, k: usize) -> Result<PointCloud<T>> {
    if k < 3 {
        return Err(BitrError::InvalidNeighborCount { k, points: cloud.len() });
    }
    if cloud.len() < k {
        return Err(BitrError::InvalidNeighborCount { k, points: cloud.len() });
    }
    let centroid = cloud.centroid()?;
    let normals = cloud
        .points
        .iter()
        .map(|p| {
            let idx = nearest_indices(&cloud.points, p, k);
            let mean = idx.iter().fold(Vector3::zeros(), |acc, &i| acc + cloud.points[i]) / from_usize::<T>(k);
            let cov = idx.iter().fold(Matrix3::zeros(), |acc, &i| {
                let d = cloud.points[i] - mean;
                acc + d * d.transpose()
            });
            let eig = SymmetricEigen::new(cov);
            let n: Vector3<T> = eig.eigenvectors.column(eig.eigenvalues.imin()).into();
            let n = n.normalize();
            let s = n.dot(&(p - centroid));
            let flip = if s != T::zero() {
                s < T::zero()
            } else {
                n[n.iamax()] < T::zero()
            };
            if flip {
                -n
            } else {
                n
            }
        })
        .collect();
    PointCloud::with_normals(cloud.points.clone(), normals)
}
