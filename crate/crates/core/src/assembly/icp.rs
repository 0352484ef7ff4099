use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::projection::arun_solve;
use crate::scalar::{from_usize, to_f64, Real};
use crate::tensor_field::{PointCloud, RigidTransform};

#[derive(Debug, Clone, PartialEq)]
pub struct IcpResult<T: Real> {
    pub transform: RigidTransform<T>,
    pub initial_mse: f64,
    pub final_mse: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IcpSettings {
    pub max_iter: usize,
    /// Stop once the mean squared distance improves by less than this.
    pub tol: f64,
}

impl Default for IcpSettings {
    fn default() -> Self {
        IcpSettings {
            max_iter: 50,
            tol: 1e-10,
        }
    }
}

/// Nearest reference point for each moved source point and the mean
/// squared distance.
fn correspond<T: Real>(
    x: &[Vector3<T>],
    y: &[Vector3<T>],
    g: &RigidTransform<T>,
) -> (Vec<Vector3<T>>, T) {
    let pairs: Vec<(Vector3<T>, T)> = x
        .par_iter()
        .map(|p| {
            let q = g.apply(p);
            let mut best = (y[0], (y[0] - q).norm_squared());
            for c in &y[1..] {
                let d = (c - q).norm_squared();
                if d < best.1 {
                    best = (*c, d);
                }
            }
            best
        })
        .collect();
    let mse = pairs.iter().fold(T::zero(), |a, p| a + p.1) / from_usize(pairs.len());
    (pairs.into_iter().map(|p| p.0).collect(), mse)
}

/// Point-to-point ICP from `g0`. Returns the iterate with the smallest
/// correspondence error seen, so the result is never worse than `g0`.
pub fn icp_refine<T: Real>(
    x: &PointCloud<T>,
    y: &PointCloud<T>,
    g0: &RigidTransform<T>,
    settings: IcpSettings,
) -> IcpResult<T> {
    if x.is_empty() || y.is_empty() {
        return IcpResult {
            transform: *g0,
            initial_mse: 0.0,
            final_mse: 0.0,
            iterations: 0,
        };
    }
    let (mut matches, initial) = correspond(&x.points, &y.points, g0);
    let mut best = (*g0, initial);
    let mut previous = initial;
    let mut iterations = 0;
    while iterations < settings.max_iter {
        iterations += 1;
        let Ok(g) = arun_solve(&x.points, &matches) else {
            break;
        };
        let (next, mse) = correspond(&x.points, &y.points, &g);
        if mse < best.1 {
            best = (g, mse);
        }
        if to_f64(previous - mse) < settings.tol {
            break;
        }
        previous = mse;
        matches = next;
    }
    IcpResult {
        transform: best.0,
        initial_mse: to_f64(initial),
        final_mse: to_f64(best.1),
        iterations,
    }
}
