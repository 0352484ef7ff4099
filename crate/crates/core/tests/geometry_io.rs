mod common;

use std::fs;

use bitr::assembly::metrics;
use bitr::geometry_io::{
    add_outliers, builtin_mesh, crop_by_plane, crop_by_random_plane, estimate_normals, load_cloud, load_mesh,
    random_rigid, sample_mesh, save_cloud, split_two, voxel_grid_sample, CloudFormat, PlaneCropSpec,
    RotationScope, TriangleMesh,
};
use bitr::tensor_field::RigidTransform;
use bitr::{BitrError, Cloud};
use common::*;
use nalgebra::Vector3;
use proptest::prelude::*;

fn with_normals(n: usize, seed: u64) -> Cloud {
    let c = cube_cloud(n, seed);
    let normals = c.points.iter().map(|p| p.normalize()).collect();
    Cloud::with_normals(c.points, normals).unwrap()
}

#[test]
fn formats_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    for (name, cloud) in [
        ("a.xyz", cube_cloud(17, 1)),
        ("b.xyz", with_normals(9, 2)),
        ("c.ply", cube_cloud(11, 3)),
        ("d.ply", with_normals(12, 4)),
        ("e.obj", cube_cloud(8, 5)),
    ] {
        let path = dir.path().join(name);
        save_cloud(&path, &cloud, None).unwrap();
        assert_eq!(load_cloud(&path, None).unwrap(), cloud, "{name}");
    }
}

#[test]
fn format_names() {
    assert_eq!("pts".parse::<CloudFormat>().unwrap(), CloudFormat::Xyz);
    assert_eq!(CloudFormat::from_path("m.PLY".as_ref()).unwrap(), CloudFormat::Ply);
    assert!(matches!(CloudFormat::from_path("m.stl".as_ref()), Err(BitrError::UnknownFormat(_))));
}

#[test]
fn parse_errors_carry_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("bad.xyz", "0 0 0\n1 2\n", 2),
        ("mixed.xyz", "0 0 0\n1 2 3 0 0 1\n", 2),
        ("nan.xyz", "# header\n1 2 x\n", 2),
        ("bad.ply", "ply\nformat binary_little_endian 1.0\n", 2),
        ("short.ply", "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nend_header\n1 2 3\n4 5\n", 9),
        ("bad.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n", 4),
    ];
    for (name, text, line) in cases {
        let path = dir.path().join(name);
        fs::write(&path, text).unwrap();
        let err = if name.ends_with(".obj") { load_mesh(&path).unwrap_err() } else { load_cloud(&path, None).unwrap_err() };
        match err {
            BitrError::Parse { line: l, .. } => assert_eq!(l, line, "{name}"),
            other => panic!("{name}: {other}"),
        }
    }
    assert!(matches!(load_cloud(&dir.path().join("missing.xyz"), None), Err(BitrError::Io(_))));
}

#[test]
fn obj_faces_are_fan_triangulated() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("quad.obj");
    fs::write(&path, "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\nf -4 -2 -1\n").unwrap();
    let mesh = load_mesh(&path).unwrap();
    assert_eq!(mesh.faces, vec![[0, 1, 2], [0, 2, 3], [0, 2, 3]]);
    assert!((mesh.face_area(0) - 0.5).abs() < 1e-15);
}

#[test]
fn sampling_follows_area() {
    // Two triangles with areas 1 and 3.
    let mesh = TriangleMesh::new(
        vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(2.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(0.0, 0.0, 5.0),
            Vector3::new(6.0, 0.0, 5.0),
            Vector3::new(0.0, 1.0, 5.0),
        ],
        vec![[0, 1, 2], [3, 4, 5]],
    )
    .unwrap();
    let cloud = sample_mesh(&mesh, 8000, 1).unwrap();
    assert_eq!(cloud.len(), 8000);
    let upper = cloud.points.iter().filter(|p| p.z > 2.5).count() as f64 / 8000.0;
    assert!((upper - 0.75).abs() < 0.02, "{upper}");
    assert_eq!(sample_mesh(&mesh, 50, 3).unwrap(), sample_mesh(&mesh, 50, 3).unwrap());
    assert!(TriangleMesh::new(vec![Vector3::zeros()], vec![[0, 0, 1]]).is_err());
}

#[test]
fn crop_counts() {
    let cloud = cube_cloud(100, 6);
    let spec = PlaneCropSpec::new(Vector3::x(), 0.3).unwrap();
    let (kept, dropped) = crop_by_plane(&cloud, &spec);
    assert_eq!((kept.len(), dropped.len()), (30, 70));
    let min_kept = kept.points.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
    assert!(dropped.points.iter().all(|p| p.x <= min_kept));
    let (all, none) = crop_by_plane(&cloud, &PlaneCropSpec::new(Vector3::y(), 1.0).unwrap());
    assert_eq!((all.len(), none.len()), (100, 0));
    assert_eq!(all, cloud);
    assert!(PlaneCropSpec::new(Vector3::new(1.0, 1.0, 0.0), 0.5).is_err());
    assert!(PlaneCropSpec::new(Vector3::z(), 0.0).is_err());
    assert_eq!(crop_by_random_plane(&cloud, 0.45, 3).unwrap().0.len(), 45);
}

#[test]
fn bunny_protocol_split_sizes() {
    let cloud = add_outliers(&sample_mesh(&builtin_mesh(24), 2048, 7).unwrap(), 200, 1.0, 8);
    assert_eq!(cloud.len(), 2248);
    let (a, b) = split_two(&cloud, 0.3, 9).unwrap();
    assert_eq!((a.len(), b.len()), (674, 1574));
    assert!(split_two(&cloud, 1.0, 9).is_err());
}

#[test]
fn outliers_fill_the_box() {
    let base = with_normals(10, 10);
    let out = add_outliers(&base, 500, 1.0, 11);
    assert_eq!(out.len(), 510);
    assert_eq!(&out.points[..10], &base.points[..]);
    assert!(out.points[10..].iter().all(|p| p.amax() <= 1.0));
    let ns = out.normals.as_ref().unwrap();
    assert!(ns[10..].iter().all(|n| (n.norm() - 1.0).abs() < 1e-12));
    assert_eq!(add_outliers(&base, 5, 1.0, 12), add_outliers(&base, 5, 1.0, 12));
}

#[test]
fn voxel_grid_merges_cells() {
    let cloud = Cloud::new(vec![
        Vector3::new(0.1, 0.1, 0.1),
        Vector3::new(0.3, 0.3, 0.3),
        Vector3::new(1.5, 0.2, 0.2),
        Vector3::new(-0.2, 0.2, 0.2),
    ]);
    let v = voxel_grid_sample(&cloud, 1.0).unwrap();
    assert_eq!(v.len(), 3);
    assert!(v.points.iter().any(|p| (p - Vector3::new(0.2, 0.2, 0.2)).norm() < 1e-15));
    assert!(voxel_grid_sample(&cloud, 0.0).is_err());
    assert_eq!(voxel_grid_sample(&cloud, 1e-6).unwrap().len(), 4);
}

#[test]
fn planar_normals() {
    let mut r = rng(13);
    let pts: Vec<Vector3<f64>> = (0..60).map(|_| {
        let v = vec3(&mut r, 1.0);
        Vector3::new(v.x, v.y, 0.0)
    }).collect();
    let est = estimate_normals(&Cloud::new(pts), 8).unwrap();
    for n in est.normals.unwrap() {
        assert!((n - Vector3::z()).norm() < 1e-9, "{n}");
    }
}

#[test]
fn sphere_normals_point_outward() {
    let mut r = rng(14);
    let pts: Vec<Vector3<f64>> = (0..400).map(|_| vec3(&mut r, 1.0).normalize()).collect();
    let est = estimate_normals(&Cloud::new(pts.clone()), 10).unwrap();
    for (p, n) in pts.iter().zip(est.normals.unwrap()) {
        assert!(n.dot(p) > 0.9);
    }
    assert!(estimate_normals(&Cloud::new(pts[..2].to_vec()), 3).is_err());
    assert!(estimate_normals(&Cloud::new(pts), 2).is_err());
}

#[test]
fn random_rigid_is_deterministic_and_scoped() {
    assert_eq!(random_rigid(4, RotationScope::Uniform, 1.0).unwrap(), random_rigid(4, RotationScope::Uniform, 1.0).unwrap());
    assert!(random_rigid(4, RotationScope::Uniform, -1.0).is_err());
    let id = RigidTransform::identity();
    for seed in 0..200 {
        let g = random_rigid(seed, RotationScope::MaxAngle(10.0), 0.5).unwrap();
        assert!(metrics(&g, &id).rotation_deg <= 10.0 + 1e-9);
        assert!(g.t.norm() <= 0.5);
    }
}

#[test]
fn uniform_rotation_angle_histogram() {
    // Haar measure: P(angle ≤ θ) = (θ − sin θ) / π.
    let n = 20_000;
    let mut counts = [0usize; 4];
    let id = RigidTransform::identity();
    let mut r = rng(15);
    for _ in 0..n {
        let g = RigidTransform::from_rotation(rotation(&mut r)).unwrap();
        let theta = metrics(&g, &id).rotation_deg.to_radians();
        counts[((theta / std::f64::consts::PI * 4.0) as usize).min(3)] += 1;
    }
    let cdf = |t: f64| (t - t.sin()) / std::f64::consts::PI;
    for (b, &c) in counts.iter().enumerate() {
        let (lo, hi) = (b as f64 * std::f64::consts::FRAC_PI_4, (b + 1) as f64 * std::f64::consts::FRAC_PI_4);
        let expected = cdf(hi) - cdf(lo);
        assert!((c as f64 / n as f64 - expected).abs() < 0.015, "bin {b}: {c} vs {expected}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn normals_rotate_with_the_cloud(seed in 0u64..10_000) {
        let cloud = sample_mesh(&builtin_mesh(12), 150, seed).unwrap();
        let g = rigid(&mut rng(seed));
        let a = estimate_normals(&cloud.transformed(&g), 12).unwrap();
        let b = estimate_normals(&cloud, 12).unwrap().transformed(&g);
        for (x, y) in a.normals.unwrap().iter().zip(b.normals.as_ref().unwrap()) {
            prop_assert!((x - y).norm() < 1e-8);
        }
    }
}
