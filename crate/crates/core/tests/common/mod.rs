#![allow(dead_code)]

use std::collections::BTreeMap;

use bitr::geometry_io::{random_rigid_with, random_rotation, seeded_rng, RotationScope, SeededRng};
use bitr::params::RandomInit;
use bitr::rep_theory::BiDegree;
use bitr::tensor_field::{BiRigid, FeatureBlock, Point6, PointCloud, RigidTransform, TensorField};
use nalgebra::{DMatrix, Matrix3, Vector3};
use rand::Rng;

pub fn rng(seed: u64) -> SeededRng {
    seeded_rng(seed)
}

pub fn init(seed: u64) -> RandomInit<SeededRng> {
    RandomInit::new(seeded_rng(seed))
}

pub fn rigid(rng: &mut SeededRng) -> RigidTransform<f64> {
    random_rigid_with(rng, RotationScope::Uniform, 1.0).unwrap()
}

pub fn bi_rigid(rng: &mut SeededRng) -> BiRigid<f64> {
    BiRigid::new(rigid(rng), rigid(rng))
}

pub fn rotation(rng: &mut SeededRng) -> Matrix3<f64> {
    random_rotation(rng)
}

pub fn vec3(rng: &mut SeededRng, h: f64) -> Vector3<f64> {
    Vector3::from_fn(|_, _| rng.random_range(-h..h))
}

/// Points uniform in `[-1, 1]³`.
pub fn cube_cloud(n: usize, seed: u64) -> PointCloud<f64> {
    let mut rng = seeded_rng(seed);
    PointCloud::new((0..n).map(|_| vec3(&mut rng, 1.0)).collect())
}

/// Random 6-D points with random features of the given degrees.
pub fn random_field(n: usize, degrees: &BTreeMap<BiDegree, usize>, seed: u64) -> TensorField<f64> {
    let mut rng = seeded_rng(seed);
    let points = (0..n).map(|_| Point6::new(vec3(&mut rng, 1.0), vec3(&mut rng, 1.0))).collect();
    let mut f = TensorField::new(points);
    for (&d, &c) in degrees {
        let data = DMatrix::from_fn(n * c, d.dim(), |_, _| rng.random_range(-1.0..1.0));
        f.insert(FeatureBlock::new(d, c, data).unwrap()).unwrap();
    }
    f
}

pub fn degrees(list: &[(usize, usize)], c: usize) -> BTreeMap<BiDegree, usize> {
    list.iter().map(|&(p, q)| (BiDegree::new(p, q), c)).collect()
}

pub fn assert_close_fields(a: &TensorField<f64>, b: &TensorField<f64>, tol: f64) {
    assert_eq!(a.points.len(), b.points.len());
    for (za, zb) in a.points.iter().zip(&b.points) {
        assert!((za.z1 - zb.z1).norm() < tol && (za.z2 - zb.z2).norm() < tol, "points differ");
    }
    let diff = a.max_abs_diff(b).expect("same degrees and shapes");
    assert!(diff < tol, "features differ by {diff:e}");
}
