use rand::Rng;
use serde::{Deserialize, Serialize};

use super::model::{bitr_forward, BitrModel};
use crate::error::Result;
use crate::geometry_io::{random_rigid_with, seeded_rng, RotationScope};
use crate::scalar::{lit, to_f64, Real};
use crate::tensor_field::{relative_error, PointCloud, RigidTransform};

/// Worst residuals of the three equivariance identities over the trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub trials: usize,
    pub seed: u64,
    pub delta_bi: f64,
    pub delta_swap: f64,
    pub delta_scale: f64,
}

fn cast_rigid<T: Real>(g: &RigidTransform<f64>) -> RigidTransform<T> {
    g.cast()
}

/// Per trial, with random `(g1, g2)` and `c` log-uniform in `[0.5, 10]`:
///
/// * `Δ_bi = ‖Φ(g1 X, g2 Y) − g2 Φ(X, Y) g1⁻¹‖_F`,
/// * `Δ_swap = ‖Φ(Y', X') − Φ(X', Y')⁻¹‖_F` on the moved pair,
/// * `Δ_scale = ‖r(cX', cY') − r'‖_F + ‖t(cX', cY') − c t'‖`,
///
/// all on 4×4 homogeneous matrices. Returns the maxima.
pub fn equivariance_audit<T: Real>(
    model: &BitrModel<T>,
    x: &PointCloud<T>,
    y: &PointCloud<T>,
    trials: usize,
    seed: u64,
) -> Result<AuditReport> {
    let mut rng = seeded_rng(seed);
    let base = bitr_forward(model, x, y)?.transform;
    let mut report = AuditReport {
        trials,
        seed,
        delta_bi: 0.0,
        delta_swap: 0.0,
        delta_scale: 0.0,
    };
    for _ in 0..trials {
        let g1 = cast_rigid::<T>(&random_rigid_with(&mut rng, RotationScope::Uniform, 1.0)?);
        let g2 = cast_rigid::<T>(&random_rigid_with(&mut rng, RotationScope::Uniform, 1.0)?);
        let c: T = lit(rng.random_range(0.5f64.ln()..=10f64.ln()).exp());
        let (xm, ym) = (x.transformed(&g1), y.transformed(&g2));

        let moved = bitr_forward(model, &xm, &ym)?.transform;
        let expected = g2.compose(&base).compose(&g1.inverse());
        report.delta_bi = report.delta_bi.max(to_f64(relative_error(&moved, &expected)));

        let swapped = bitr_forward(model, &ym, &xm)?.transform;
        report.delta_swap = report.delta_swap.max(to_f64(relative_error(&swapped, &moved.inverse())));

        let scaled = bitr_forward(model, &xm.scaled(c), &ym.scaled(c))?.transform;
        let d = (scaled.r - moved.r).norm() + (scaled.t - moved.t * c).norm();
        report.delta_scale = report.delta_scale.max(to_f64(d));
    }
    Ok(report)
}
