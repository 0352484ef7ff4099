use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use bitr::assembly::{
    arun_solve, bitr_forward, complete_match, equivariance_audit, icp_refine, metrics, AuditReport, Metrics,
    ScaleMode,
};
use bitr::equi_kernel::{certify_kernel_constraint, KernelSpec};
use bitr::geometry_io::{
    add_outliers, builtin_mesh, crop_by_random_plane, load_cloud, load_mesh, random_rigid_with, sample_mesh,
    save_cloud, seeded_rng, split_two, CloudFormat, SeededRng,
};
use bitr::layers::LayerParams;
use bitr::rep_theory::BiDegree;
use bitr::tensor_field::TransformDoc;
use bitr::{BitrError, Cloud, Model, Transform};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

/// Result of a command: the JSON document it printed and whether every
/// configured tolerance held.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: serde_json::Value,
    pub passed: bool,
}

impl Outcome {
    fn new<S: Serialize>(report: &S, passed: bool) -> Result<Self> {
        Ok(Outcome {
            report: serde_json::to_value(report)?,
            passed,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenReport {
    pub seed: u64,
    pub total_points: usize,
    pub source_points: usize,
    pub reference_points: usize,
    pub source: String,
    pub reference: String,
    pub gt: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssembleReport {
    pub transform: [[f64; 4]; 4],
    pub complete_match: bool,
    /// Singular values of the pre-projection rotation estimate.
    pub singular_values: Option<[f64; 3]>,
    pub near_degenerate: Option<bool>,
    pub icp: Option<IcpReport>,
    pub metrics: Option<Metrics>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IcpReport {
    pub transform: [[f64; 4]; 4],
    pub initial_mse: f64,
    pub final_mse: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelFailure {
    pub layer: String,
    pub input: BiDegree,
    pub output: BiDegree,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelAudit {
    pub specs: usize,
    pub trials: usize,
    pub tol: f64,
    pub max_residual: f64,
    pub failures: Vec<KernelFailure>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditOutput {
    pub source_points: usize,
    pub reference_points: usize,
    pub tol: f64,
    pub equivariance: AuditReport,
    pub bi_passed: bool,
    pub swap_passed: bool,
    pub scale_passed: bool,
    pub kernels: KernelAudit,
    pub passed: bool,
}

fn write_json<S: Serialize>(dir: &Path, name: &str, value: &S) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value)? + "\n")
        .with_context(|| format!("writing {}", path.display()))
}

pub fn read_transform(path: &Path) -> Result<Transform> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let doc: TransformDoc = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(doc.to_transform()?)
}

fn required<'a>(path: &'a Option<std::path::PathBuf>, what: &str) -> Result<&'a Path> {
    path.as_deref().with_context(|| format!("no {what} cloud given"))
}

fn load_pair(cfg: &RunConfig) -> Result<(Cloud, Cloud)> {
    let src = required(&cfg.source, "source")?;
    let dst = required(&cfg.reference, "reference")?;
    let x = load_cloud(src, None).with_context(|| format!("loading {}", src.display()))?;
    let y = load_cloud(dst, None).with_context(|| format!("loading {}", dst.display()))?;
    Ok((x, y))
}

fn model_from(cfg: &RunConfig) -> Result<Model> {
    match &cfg.model {
        Some(path) => Model::load(path).with_context(|| format!("loading model {}", path.display())),
        None => Ok(Model::random(cfg.model_config.clone(), cfg.seed)?),
    }
}

fn extension(format: CloudFormat) -> &'static str {
    match format {
        CloudFormat::Xyz => "xyz",
        CloudFormat::Ply => "ply",
        CloudFormat::Obj => "obj",
    }
}

/// Sample, add outliers, cut into two parts and move each part rigidly.
pub fn cmd_gen(cfg: &RunConfig) -> Result<Outcome> {
    let g = &cfg.gen;
    let mut rng = seeded_rng(cfg.seed);
    let mut stage_seed = || -> u64 { rng.random() };
    let (sample_seed, outlier_seed, cut_seed, cut_seed2) = (stage_seed(), stage_seed(), stage_seed(), stage_seed());
    let mut motion = seeded_rng(stage_seed());

    let base = match (&g.cloud, &g.mesh) {
        (Some(path), _) => load_cloud(path, None).with_context(|| format!("loading {}", path.display()))?,
        (None, Some(path)) => sample_mesh(&load_mesh(path)?, g.samples, sample_seed)?,
        (None, None) => sample_mesh(&builtin_mesh(g.mesh_resolution), g.samples, sample_seed)?,
    };
    let full = add_outliers(&base, g.outliers, g.outlier_half_width, outlier_seed);
    let (x, y) = match (g.split, g.crop) {
        (Some(ratio), _) => split_two(&full, ratio, cut_seed)?,
        (None, Some(keep)) => (
            crop_by_random_plane(&full, keep, cut_seed)?.0,
            crop_by_random_plane(&full, keep, cut_seed2)?.0,
        ),
        (None, None) => (full.clone(), full.clone()),
    };
    let g1 = random_rigid_with(&mut motion, g.rotation, g.translation)?;
    let g2 = random_rigid_with(&mut motion, g.rotation, g.translation)?;
    let gt = g2.compose(&g1.inverse());

    let ext = extension(g.format);
    let (src_name, dst_name) = (format!("source.{ext}"), format!("reference.{ext}"));
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    save_cloud(&cfg.out.join(&src_name), &x.transformed(&g1), Some(g.format))?;
    save_cloud(&cfg.out.join(&dst_name), &y.transformed(&g2), Some(g.format))?;
    write_json(&cfg.out, "gt.json", &TransformDoc::from_transform(&gt))?;
    let report = GenReport {
        seed: cfg.seed,
        total_points: full.len(),
        source_points: x.len(),
        reference_points: y.len(),
        source: src_name,
        reference: dst_name,
        gt: "gt.json".into(),
    };
    write_json(&cfg.out, "gen.json", &report)?;
    Outcome::new(&report, true)
}

/// Forward pass (or complete matching), optional ICP, metrics against gt.
pub fn cmd_assemble(cfg: &RunConfig) -> Result<Outcome> {
    let (x, y) = load_pair(cfg)?;
    let model = model_from(cfg)?;
    let a = &cfg.assemble;
    let (mut transform, singular_values, near_degenerate) = if a.complete_match {
        (complete_match(&model, &x, &y)?, None, None)
    } else {
        match bitr_forward(&model, &x, &y) {
            Ok(r) => (
                r.transform,
                Some([r.singular_values[0], r.singular_values[1], r.singular_values[2]]),
                Some(r.near_degenerate),
            ),
            Err(e @ BitrError::DegenerateSpectrum { .. }) => {
                return Err(e).context("rotation estimate is degenerate; the projection is not unique")
            }
            Err(e) => return Err(e.into()),
        }
    };
    let icp = if a.refine_icp {
        let out = icp_refine(&x, &y, &transform, cfg.icp);
        transform = out.transform;
        Some(IcpReport {
            transform: transform.to_rows(),
            initial_mse: out.initial_mse,
            final_mse: out.final_mse,
            iterations: out.iterations,
        })
    } else {
        None
    };
    let metrics = match &cfg.gt {
        Some(path) => Some(metrics(&transform, &read_transform(path)?)),
        None => None,
    };
    let passed = match metrics {
        Some(m) => {
            a.max_rotation_deg.is_none_or(|t| m.rotation_deg <= t) && a.max_translation.is_none_or(|t| m.translation <= t)
        }
        None => true,
    };
    write_json(&cfg.out, "transform.json", &TransformDoc::from_transform(&transform))?;
    if let Some(m) = &metrics {
        write_json(&cfg.out, "metrics.json", m)?;
    }
    let report = AssembleReport {
        transform: transform.to_rows(),
        complete_match: a.complete_match,
        singular_values,
        near_degenerate,
        icp,
        metrics,
        passed,
    };
    write_json(&cfg.out, "assemble.json", &report)?;
    Outcome::new(&report, passed)
}

fn layer_kernels(name: String, layer: &LayerParams<f64>) -> impl Iterator<Item = (String, &KernelSpec<f64>)> {
    layer
        .key_kernels
        .values()
        .chain(layer.value_kernels.values())
        .map(move |k| (name.clone(), k))
}

/// Certifies the kernel constraint of every kernel in the model.
pub fn certify_model(model: &Model, trials: usize, tol: f64, rng: &mut SeededRng) -> KernelAudit {
    let mut specs: Vec<(String, &KernelSpec<f64>)> = Vec::new();
    for (l, layer) in model.extractor.layers.iter().enumerate() {
        specs.extend(layer_kernels(format!("extractor.{l}"), layer));
    }
    for (l, stage) in model.stages.iter().enumerate() {
        specs.extend(layer_kernels(format!("bi.{l}"), &stage.layer));
    }
    let mut audit = KernelAudit {
        specs: specs.len(),
        trials,
        tol,
        max_residual: 0.0,
        failures: Vec::new(),
        passed: true,
    };
    for (layer, spec) in specs {
        let cert = certify_kernel_constraint(spec, trials, tol, rng);
        audit.max_residual = audit.max_residual.max(cert.max_residual);
        if !cert.passed {
            audit.passed = false;
            audit.failures.push(KernelFailure {
                layer,
                input: cert.input,
                output: cert.output,
                max_residual: cert.max_residual,
            });
        }
    }
    audit
}

/// Clouds for the audit: the configured inputs, or two samplings of the
/// built-in mesh with seeded sizes, the second rigidly moved.
fn audit_clouds(cfg: &RunConfig) -> Result<(Cloud, Cloud)> {
    if cfg.source.is_some() || cfg.reference.is_some() {
        return load_pair(cfg);
    }
    let a = &cfg.audit;
    let mut rng = seeded_rng(cfg.seed ^ 0x5eed_c10d);
    let mesh = builtin_mesh(cfg.gen.mesh_resolution);
    let n1 = rng.random_range(a.min_points..=a.max_points);
    let n2 = rng.random_range(a.min_points..=a.max_points);
    let x = sample_mesh(&mesh, n1, rng.random())?;
    let g = random_rigid_with(&mut rng, bitr::geometry_io::RotationScope::Uniform, 1.0)?;
    let y = sample_mesh(&mesh, n2, rng.random())?.transformed(&g);
    Ok((x, y))
}

/// Equivariance audit plus kernel certification, with optional fault injection.
pub fn cmd_audit(cfg: &RunConfig) -> Result<Outcome> {
    let mut cfg = cfg.clone();
    let a = cfg.audit.clone();
    if a.break_swap_ties {
        cfg.model_config.swap_tied = false;
    }
    if a.break_homogeneity {
        cfg.model_config.scale_mode = ScaleMode::AllInvariant;
    }
    if cfg.model.is_some() && (a.break_swap_ties || a.break_homogeneity) {
        bail!("fault injection applies to random models only; drop --model");
    }
    let model = model_from(&cfg)?;
    let (x, y) = audit_clouds(&cfg)?;
    let equivariance = equivariance_audit(&model, &x, &y, a.trials, cfg.seed)?;
    let kernels = certify_model(&model, a.kernel_trials, a.kernel_tol, &mut seeded_rng(cfg.seed.wrapping_add(1)));
    let bi_passed = equivariance.delta_bi <= a.tol;
    let swap_passed = equivariance.delta_swap <= a.tol;
    let scale_passed = equivariance.delta_scale <= a.tol;
    let passed = bi_passed && swap_passed && scale_passed && kernels.passed;
    let report = AuditOutput {
        source_points: x.len(),
        reference_points: y.len(),
        tol: a.tol,
        equivariance,
        bi_passed,
        swap_passed,
        scale_passed,
        kernels,
        passed,
    };
    write_json(&cfg.out, "audit.json", &report)?;
    Outcome::new(&report, passed)
}

/// Closed-form registration of corresponded clouds.
pub fn cmd_arun(cfg: &RunConfig) -> Result<Outcome> {
    let (x, y) = load_pair(cfg)?;
    let g = arun_solve(&x.points, &y.points)?;
    let doc = TransformDoc::from_transform(&g);
    write_json(&cfg.out, "transform.json", &doc)?;
    Outcome::new(&doc, true)
}

/// Point-to-point ICP from the configured start (identity by default).
pub fn cmd_icp(cfg: &RunConfig) -> Result<Outcome> {
    let (x, y) = load_pair(cfg)?;
    let g0 = match &cfg.icp_init {
        Some(path) => read_transform(path)?,
        None => Transform::identity(),
    };
    let out = icp_refine(&x, &y, &g0, cfg.icp);
    let report = IcpReport {
        transform: out.transform.to_rows(),
        initial_mse: out.initial_mse,
        final_mse: out.final_mse,
        iterations: out.iterations,
    };
    write_json(&cfg.out, "transform.json", &TransformDoc::from_transform(&out.transform))?;
    write_json(&cfg.out, "icp.json", &report)?;
    Outcome::new(&report, true)
}
