use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::random::{random_unit_vector, seeded_rng};
use crate::error::{BitrError, Result};
use crate::tensor_field::PointCloud;

/// Triangle mesh with vertex-indexed faces.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vector3<f64>>,
    pub faces: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vector3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if let Some(bad) = faces.iter().flatten().find(|&&i| i >= vertices.len()) {
            return Err(BitrError::InvalidArgument(format!(
                "face index {bad} out of range for {} vertices",
                vertices.len()
            )));
        }
        Ok(TriangleMesh { vertices, faces })
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.faces[f].map(|i| self.vertices[i]);
        0.5 * (b - a).cross(&(c - a)).norm()
    }
}

/// Closed, asymmetric test surface: a sphere with radius modulated by low
/// order harmonics, fitting in the unit ball.
pub fn builtin_mesh(resolution: usize) -> TriangleMesh {
    let rings = resolution.max(4);
    let segments = 2 * rings;
    let radius = |theta: f64, phi: f64| {
        0.6 + 0.15 * (3.0 * theta).sin() * (2.0 * phi).cos() + 0.1 * theta.cos() + 0.08 * phi.sin()
    };
    let mut vertices = vec![Vector3::new(0.0, 0.0, radius(0.0, 0.0))];
    for i in 1..rings {
        let theta = PI * i as f64 / rings as f64;
        for j in 0..segments {
            let phi = 2.0 * PI * j as f64 / segments as f64;
            let r = radius(theta, phi);
            vertices.push(Vector3::new(
                r * theta.sin() * phi.cos(),
                r * theta.sin() * phi.sin(),
                r * theta.cos(),
            ));
        }
    }
    vertices.push(Vector3::new(0.0, 0.0, -radius(PI, 0.0)));
    let south = vertices.len() - 1;
    let at = |i: usize, j: usize| 1 + (i - 1) * segments + j % segments;
    let mut faces = Vec::new();
    for j in 0..segments {
        faces.push([0, at(1, j), at(1, j + 1)]);
        faces.push([south, at(rings - 1, j + 1), at(rings - 1, j)]);
    }
    for i in 1..rings - 1 {
        for j in 0..segments {
            faces.push([at(i, j), at(i + 1, j), at(i + 1, j + 1)]);
            faces.push([at(i, j), at(i + 1, j + 1), at(i, j + 1)]);
        }
    }
    TriangleMesh { vertices, faces }
}

/// Area-weighted uniform surface sampling.
pub fn sample_mesh(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<PointCloud<f64>> {
    if mesh.faces.is_empty() {
        return Err(BitrError::InvalidArgument("mesh has no faces".into()));
    }
    let areas: Vec<f64> = (0..mesh.faces.len()).map(|f| mesh.face_area(f)).collect();
    let pick = WeightedIndex::new(&areas)
        .map_err(|e| BitrError::InvalidArgument(format!("mesh areas: {e}")))?;
    let mut rng = seeded_rng(seed);
    let points = (0..n)
        .map(|_| {
            let [a, b, c] = mesh.faces[pick.sample(&mut rng)].map(|i| mesh.vertices[i]);
            let s = rng.random::<f64>().sqrt();
            let r2 = rng.random::<f64>();
            a * (1.0 - s) + b * (s * (1.0 - r2)) + c * (s * r2)
        })
        .collect();
    Ok(PointCloud::new(points))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneCropSpec {
    pub normal: Vector3<f64>,
    pub keep: f64,
}

impl PlaneCropSpec {
    pub fn new(normal: Vector3<f64>, keep: f64) -> Result<Self> {
        let n = normal.norm();
        if !(n > 0.0) || (n - 1.0).abs() > 1e-9 {
            return Err(BitrError::InvalidArgument("crop normal must be a unit vector".into()));
        }
        if !(keep > 0.0 && keep <= 1.0) {
            return Err(BitrError::InvalidArgument(format!("keep ratio {keep} outside (0, 1]")));
        }
        Ok(PlaneCropSpec { normal, keep })
    }
}

/// Keeps the `round(s N)` points furthest along the plane normal, which
/// places the plane at the matching quantile. Both parts keep input order.
pub fn crop_by_plane(
    cloud: &PointCloud<f64>,
    spec: &PlaneCropSpec,
) -> (PointCloud<f64>, PointCloud<f64>) {
    let n = cloud.len();
    let kept_count = ((spec.keep * n as f64).round() as usize).min(n);
    let proj: Vec<f64> = cloud.points.iter().map(|p| p.dot(&spec.normal)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| proj[b].total_cmp(&proj[a]).then(a.cmp(&b)));
    let (kept, dropped) = order.split_at_mut(kept_count);
    kept.sort_unstable();
    dropped.sort_unstable();
    (cloud.select(kept), cloud.select(dropped))
}

/// Plane crop with a uniformly random normal.
pub fn crop_by_random_plane(
    cloud: &PointCloud<f64>,
    keep: f64,
    seed: u64,
) -> Result<(PointCloud<f64>, PointCloud<f64>)> {
    let normal = random_unit_vector(&mut seeded_rng(seed));
    Ok(crop_by_plane(cloud, &PlaneCropSpec::new(normal, keep)?))
}

/// Splits by a random plane so the first part has `round(ratio N)` points.
pub fn split_two(
    cloud: &PointCloud<f64>,
    ratio: f64,
    seed: u64,
) -> Result<(PointCloud<f64>, PointCloud<f64>)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(BitrError::InvalidArgument(format!("split ratio {ratio} outside (0, 1)")));
    }
    crop_by_random_plane(cloud, ratio, seed)
}

/// Appends `count` points uniform in `[-h, h]³`. Outliers in a cloud with
/// normals get uniformly random unit normals.
pub fn add_outliers(cloud: &PointCloud<f64>, count: usize, half_width: f64, seed: u64) -> PointCloud<f64> {
    let mut rng = seeded_rng(seed);
    let mut out = cloud.clone();
    for _ in 0..count {
        let p = Vector3::from_fn(|_, _| rng.random_range(-half_width..=half_width));
        out.points.push(p);
        if let Some(ns) = out.normals.as_mut() {
            ns.push(random_unit_vector(&mut rng));
        }
    }
    out
}

/// One centroid per occupied cell of a grid with spacing `cell`, ordered by
/// cell index. Normals are averaged and renormalized.
pub fn voxel_grid_sample(cloud: &PointCloud<f64>, cell: f64) -> Result<PointCloud<f64>> {
    if !(cell > 0.0) {
        return Err(BitrError::InvalidArgument(format!("cell size {cell} must be positive")));
    }
    let mut cells: BTreeMap<[i64; 3], (Vector3<f64>, Vector3<f64>, usize)> = BTreeMap::new();
    for (i, p) in cloud.points.iter().enumerate() {
        let key = [0, 1, 2].map(|k| (p[k] / cell).floor() as i64);
        let entry = cells.entry(key).or_insert((Vector3::zeros(), Vector3::zeros(), 0));
        entry.0 += p;
        if let Some(ns) = &cloud.normals {
            entry.1 += ns[i];
        }
        entry.2 += 1;
    }
    let points = cells.values().map(|(s, _, c)| s / *c as f64).collect();
    match cloud.normals {
        Some(_) => {
            let normals = cells
                .values()
                .map(|(_, n, _)| n.try_normalize(0.0).unwrap_or_else(Vector3::zeros))
                .collect();
            PointCloud::with_normals(points, normals)
        }
        None => Ok(PointCloud::new(points)),
    }
}
