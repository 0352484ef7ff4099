mod common;

use bitr::assembly::{
    arun_solve, bitr_forward, complete_match, equivariance_audit, extract_keypoints, icp_refine, keypoint_weights,
    loss, merge_pc, metrics, se3_project, svd_project, svd_project_unchecked, BitrModel, IcpSettings, ModelConfig,
    ModelDoc, ScaleMode,
};
use bitr::geometry_io::{builtin_mesh, sample_mesh};
use bitr::rep_theory::BiDegree;
use bitr::tensor_field::{FeatureBlock, Point6, RigidTransform, TensorField};
use bitr::{BitrError, Cloud, Model};
use common::*;
use nalgebra::{DMatrix, Matrix3, Rotation3, Vector3};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn small_config() -> ModelConfig {
    ModelConfig {
        keypoints: 12,
        k: 10,
        channels: 3,
        ..ModelConfig::default()
    }
}

fn mesh_cloud(n: usize, seed: u64) -> Cloud {
    sample_mesh(&builtin_mesh(12), n, seed).unwrap()
}

fn rz(deg: f64) -> Matrix3<f64> {
    Rotation3::from_axis_angle(&Vector3::z_axis(), deg.to_radians()).into_inner()
}

#[test]
fn svd_projection_examples() {
    let d = Matrix3::from_diagonal(&Vector3::new(3.0, 2.0, 1.0));
    assert!((svd_project(&d).unwrap() - Matrix3::identity()).amax() < 1e-15);
    // A reflection-type input projects to the nearest proper rotation.
    let d = Matrix3::from_diagonal(&Vector3::new(3.0, 2.0, -1.0));
    assert!((svd_project(&d).unwrap() - Matrix3::identity()).amax() < 1e-14);
    let r = rz(30.0) * Matrix3::from_diagonal(&Vector3::new(5.0, 1.0, 0.5));
    assert!((svd_project(&r).unwrap() - rz(30.0)).amax() < 1e-14);
    assert!((svd_project_unchecked(&rz(40.0)) - rz(40.0)).amax() < 1e-14);
}

#[test]
fn svd_projection_rejects_degenerate_spectra() {
    for m in [Matrix3::identity(), rz(25.0), Matrix3::zeros(), Matrix3::from_diagonal(&Vector3::new(2.0, 1.0, 1.0))] {
        assert!(matches!(svd_project(&m), Err(BitrError::DegenerateSpectrum { .. })), "{m}");
    }
}

#[test]
fn arun_examples_and_errors() {
    let mut r = rng(1);
    let x: Vec<Vector3<f64>> = (0..20).map(|_| vec3(&mut r, 1.0)).collect();
    let g = rigid(&mut r);
    let y: Vec<_> = x.iter().map(|p| g.apply(p)).collect();
    let est = arun_solve(&x, &y).unwrap();
    assert!((est.to_homogeneous() - g.to_homogeneous()).amax() < 1e-9);
    assert!((arun_solve(&x, &x).unwrap().to_homogeneous() - nalgebra::Matrix4::identity()).amax() < 1e-12);
    assert!(matches!(arun_solve(&x, &y[..5]), Err(BitrError::LengthMismatch { .. })));
    assert!(arun_solve(&x[..2], &y[..2]).is_err());
}

#[test]
fn se3_projection_identity_example() {
    let kx = vec![Vector3::new(0.0, 0.0, 0.0), Vector3::new(2.0, 0.0, 0.0)];
    let ky = vec![Vector3::new(1.0, 1.0, 1.0), Vector3::new(1.0, 3.0, 1.0)];
    let points = merge_pc(&kx, &ky).unwrap();
    let mut f = TensorField::new(points);
    let diag = Matrix3::from_diagonal(&Vector3::new(3.0, 2.0, 1.0));
    let rows = DMatrix::from_fn(2, 9, |_, j| diag.as_slice()[j]);
    f.insert(FeatureBlock::new(BiDegree::new(1, 1), 1, rows).unwrap()).unwrap();
    f.insert(FeatureBlock::zeros(BiDegree::new(1, 0), 1, 2)).unwrap();
    f.insert(FeatureBlock::zeros(BiDegree::new(0, 1), 1, 2)).unwrap();
    let out = se3_project(&f, &kx, &ky).unwrap();
    assert!((out.transform.r - Matrix3::identity()).amax() < 1e-15);
    assert!((out.transform.t - Vector3::new(0.0, 2.0, 1.0)).norm() < 1e-15);
    assert!(!out.near_degenerate);
    assert!((out.singular_values - Vector3::new(3.0, 2.0, 1.0)).amax() < 1e-14);
}

#[test]
fn merge_requires_equal_counts() {
    assert!(merge_pc::<f64>(&[Vector3::zeros()], &[]).is_err());
    let m = merge_pc(&[Vector3::new(1.0, 2.0, 3.0)], &[Vector3::new(4.0, 5.0, 6.0)]).unwrap();
    assert_eq!(m, vec![Point6::new(Vector3::new(1.0, 2.0, 3.0), Vector3::new(4.0, 5.0, 6.0))]);
}

#[test]
fn metric_and_loss_examples() {
    let id = RigidTransform::<f64>::identity();
    let m = metrics(&id, &id);
    assert_eq!((m.rotation_deg, m.translation), (0.0, 0.0));
    let g = RigidTransform::new(rz(90.0), Vector3::new(3.0, 4.0, 0.0)).unwrap();
    let m = metrics(&g, &id);
    assert!((m.rotation_deg - 90.0).abs() < 1e-12);
    assert!((m.translation - 5.0).abs() < 1e-15);
    // ‖Rz(90) − I‖² = 4 and ‖t‖² = 25.
    assert!((loss(&g, &id) - 29.0).abs() < 1e-12);
    let flip = RigidTransform::from_rotation(rz(180.0)).unwrap();
    assert!((metrics(&flip, &id).rotation_deg - 180.0).abs() < 1e-6);
    assert!((loss(&flip, &id) - 8.0).abs() < 1e-12);
}

#[test]
fn config_validation() {
    for bad in [
        ModelConfig { keypoints: 1, ..ModelConfig::default() },
        ModelConfig { k: 0, ..ModelConfig::default() },
        ModelConfig { extractor_layers: 1, ..ModelConfig::default() },
        ModelConfig { bi_layers: 0, ..ModelConfig::default() },
        ModelConfig { max_degree: 3, ..ModelConfig::default() },
        ModelConfig { normal_k: 2, ..ModelConfig::default() },
    ] {
        assert!(Model::random(bad, 0).is_err());
    }
    let text = r#"{"keypoints": 8, "warp": true}"#;
    assert!(serde_json::from_str::<ModelConfig>(text).is_err());
    let partial: ModelConfig = serde_json::from_str(r#"{"keypoints": 8}"#).unwrap();
    assert_eq!(partial, ModelConfig { keypoints: 8, ..ModelConfig::default() });
}

#[test]
fn model_json_round_trip() {
    let model = Model::random(small_config(), 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    model.save(&path).unwrap();
    let loaded = Model::load(&path).unwrap();
    assert_eq!(loaded.to_doc(), model.to_doc());
    let (x, y) = (mesh_cloud(60, 1), mesh_cloud(70, 2));
    let a = bitr_forward(&model, &x, &y).unwrap().transform;
    let b = bitr_forward(&loaded, &x, &y).unwrap().transform;
    assert_eq!(a, b);

    let mut doc = model.to_doc();
    doc.schema_version = 99;
    assert!(BitrModel::<f64>::from_doc(&doc).is_err());
    let mut doc = model.to_doc();
    doc.params.insert("stray".into(), vec![1.0]);
    assert!(BitrModel::<f64>::from_doc(&doc).is_err());
    let mut doc = model.to_doc();
    let first = doc.params.keys().next().unwrap().clone();
    doc.params.remove(&first);
    assert!(BitrModel::<f64>::from_doc(&doc).is_err());
    let mut doc: ModelDoc = model.to_doc();
    doc.params.values_mut().next().unwrap().pop();
    assert!(BitrModel::<f64>::from_doc(&doc).is_err());
}

#[test]
fn swap_tied_models_share_partner_weights() {
    let tied = Model::random(small_config(), 4).unwrap().to_doc().params.len();
    let untied = Model::random(ModelConfig { swap_tied: false, ..small_config() }, 4).unwrap().to_doc().params.len();
    assert!(tied < untied);
}

#[test]
fn forward_rejects_tiny_or_empty_clouds() {
    let model = Model::random(small_config(), 5).unwrap();
    let x = mesh_cloud(40, 6);
    assert!(bitr_forward(&model, &Cloud::new(vec![]), &x).is_err());
    assert!(bitr_forward(&model, &x.select(&[0, 1]), &x).is_err());
    let plain = Model::random(ModelConfig { use_normals: false, ..small_config() }, 5).unwrap();
    assert!(keypoint_weights(&plain.extractor, &x.select(&[0, 1]), &x, 10).is_ok());
}

#[test]
fn complete_match_needs_swap_ties() {
    let model = Model::random(ModelConfig { swap_tied: false, ..small_config() }, 6).unwrap();
    let x = mesh_cloud(50, 7);
    assert!(matches!(complete_match(&model, &x, &x), Err(BitrError::NotSwapTied)));
}

#[test]
fn complete_match_recovers_rigid_copy() {
    let model = Model::random(small_config(), 7).unwrap();
    let x = mesh_cloud(90, 8);
    let g = rigid(&mut rng(9));
    let m = metrics(&complete_match(&model, &x, &x.transformed(&g)).unwrap(), &g);
    assert!(m.rotation_deg < 1e-4 && m.translation < 1e-7, "{m:?}");
}

#[test]
fn keypoints_are_convex_and_permutation_invariant() {
    let model = Model::random(small_config(), 8).unwrap();
    let (x, y) = (mesh_cloud(80, 10), mesh_cloud(64, 11));
    let (wx, _) = keypoint_weights(&model.extractor, &x, &y, 10).unwrap();
    let (kx, ky) = extract_keypoints(&model.extractor, &x, &y, 10).unwrap();
    for (w, k) in wx.iter().zip(&kx) {
        assert!(w.iter().all(|&a| a >= 0.0));
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let rebuilt = w.iter().zip(&x.points).fold(Vector3::zeros(), |a, (&c, p)| a + p * c);
        assert!((rebuilt - k).norm() < 1e-12);
    }
    let mut perm: Vec<usize> = (0..x.len()).collect();
    perm.shuffle(&mut rng(12));
    let (px, py) = extract_keypoints(&model.extractor, &x.select(&perm), &y, 10).unwrap();
    for (a, b) in kx.iter().zip(&px).chain(ky.iter().zip(&py)) {
        assert!((a - b).norm() < 1e-12);
    }
}

#[test]
fn small_audit_passes() {
    let model = Model::random(small_config(), 9).unwrap();
    let report = equivariance_audit(&model, &mesh_cloud(70, 13), &mesh_cloud(90, 14), 3, 15).unwrap();
    assert_eq!(report.trials, 3);
    for d in [report.delta_bi, report.delta_swap, report.delta_scale] {
        assert!(d < 1e-9, "{report:?}");
    }
}

#[test]
fn scale_modes_change_scale_behaviour() {
    let (x, y) = (mesh_cloud(70, 16), mesh_cloud(80, 17));
    let c = 3.0;
    for (mode, rotation_breaks, translation_breaks) in [
        (ScaleMode::Chain, false, false),
        (ScaleMode::AllInvariant, false, true),
        (ScaleMode::AllHomogeneous, true, true),
    ] {
        let model = Model::random(ModelConfig { scale_mode: mode, ..small_config() }, 10).unwrap();
        let g = bitr_forward(&model, &x, &y).unwrap().transform;
        let gs = bitr_forward(&model, &x.scaled(c), &y.scaled(c)).unwrap().transform;
        let dr = (gs.r - g.r).norm();
        let dt = (gs.t - g.t * c).norm();
        // Rounding sits near 1e-14; AllHomogeneous only breaks through the
        // attention logits, which are small at initialization.
        assert_eq!(dr > 1e-10, rotation_breaks, "{mode:?} dr {dr:e}");
        assert_eq!(dt > 1e-10, translation_breaks, "{mode:?} dt {dt:e}");
    }
}

#[test]
fn icp_never_increases_error() {
    let x = mesh_cloud(300, 18);
    let g = RigidTransform::new(rz(5.0), Vector3::new(0.01, 0.0, -0.01)).unwrap();
    let y = x.transformed(&g);
    let out = icp_refine(&x, &y, &RigidTransform::identity(), IcpSettings::default());
    assert!(out.final_mse <= out.initial_mse);
    assert!(metrics(&out.transform, &g).rotation_deg < 0.5);
    let empty = icp_refine(&Cloud::new(vec![]), &y, &g, IcpSettings::default());
    assert_eq!(empty.transform, g);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn svd_projection_lemmas(seed in 0u64..100_000, c in 0.01f64..100.0) {
        let mut r = rng(seed);
        let a = Matrix3::<f64>::from_fn(|_, _| r.random_range(-1.0..1.0));
        let s = a.singular_values();
        let mut s: Vec<f64> = s.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        prop_assume!(s[1] - s[2] > 1e-3 * s[0]);
        let (r1, r2) = (rotation(&mut r), rotation(&mut r));
        let p = svd_project(&a).unwrap();
        prop_assert!((p.transpose() * p - Matrix3::identity()).amax() < 1e-12);
        prop_assert!((p.determinant() - 1.0).abs() < 1e-12);
        prop_assert!((svd_project(&(r2 * a * r1.transpose())).unwrap() - r2 * p * r1.transpose()).amax() < 1e-10);
        prop_assert!((svd_project(&a.transpose()).unwrap() - p.transpose()).amax() < 1e-10);
        prop_assert!((svd_project(&(a * c)).unwrap() - p).amax() < 1e-10);
    }

    #[test]
    fn arun_is_bi_swap_and_scale_equivariant(seed in 0u64..100_000, c in 0.1f64..10.0) {
        let mut r = rng(seed);
        let x: Vec<Vector3<f64>> = (0..12).map(|_| vec3(&mut r, 1.0)).collect();
        let y: Vec<Vector3<f64>> = (0..12).map(|_| vec3(&mut r, 1.0)).collect();
        let (g1, g2) = (rigid(&mut r), rigid(&mut r));
        let base = arun_solve(&x, &y).unwrap();
        let xm: Vec<_> = x.iter().map(|p| g1.apply(p)).collect();
        let ym: Vec<_> = y.iter().map(|p| g2.apply(p)).collect();
        let moved = arun_solve(&xm, &ym).unwrap();
        let expected = g2.compose(&base).compose(&g1.inverse());
        prop_assert!((moved.to_homogeneous() - expected.to_homogeneous()).amax() < 1e-10);
        let swapped = arun_solve(&y, &x).unwrap();
        prop_assert!((swapped.to_homogeneous() - base.inverse().to_homogeneous()).amax() < 1e-10);
        let xs: Vec<_> = x.iter().map(|p| p * c).collect();
        let ys: Vec<_> = y.iter().map(|p| p * c).collect();
        let scaled = arun_solve(&xs, &ys).unwrap();
        prop_assert!((scaled.r - base.r).amax() < 1e-10);
        prop_assert!((scaled.t - base.t * c).amax() < 1e-10 * (1.0 + c));
    }
}
