use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bitr::assembly::{IcpSettings, ModelConfig};
use bitr::geometry_io::{CloudFormat, RotationScope};
use serde::{Deserialize, Serialize};

/// Everything a command may read. Loaded from one JSON document; command
/// line flags override individual fields afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Model file; a random model from `seed` and `model_config` otherwise.
    pub model: Option<PathBuf>,
    pub model_config: ModelConfig,
    pub out: PathBuf,
    pub source: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    /// Ground-truth transform JSON for metrics.
    pub gt: Option<PathBuf>,
    pub gen: GenConfig,
    pub assemble: AssembleConfig,
    pub audit: AuditConfig,
    pub icp: IcpSettings,
    /// Starting transform for `icp`; identity when absent.
    pub icp_init: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            model: None,
            model_config: ModelConfig::default(),
            out: PathBuf::from("."),
            source: None,
            reference: None,
            gt: None,
            gen: GenConfig::default(),
            assemble: AssembleConfig::default(),
            audit: AuditConfig::default(),
            icp: IcpSettings::default(),
            icp_init: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenConfig {
    /// OBJ mesh to sample; the built-in mesh when neither input is set.
    pub mesh: Option<PathBuf>,
    /// Use this cloud as is instead of sampling a mesh.
    pub cloud: Option<PathBuf>,
    pub mesh_resolution: usize,
    pub samples: usize,
    pub outliers: usize,
    pub outlier_half_width: f64,
    /// Split into two complementary parts, the first holding this share.
    pub split: Option<f64>,
    /// Without a split: crop each copy independently, keeping this share.
    pub crop: Option<f64>,
    pub rotation: RotationScope,
    pub translation: f64,
    pub format: CloudFormat,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            mesh: None,
            cloud: None,
            mesh_resolution: 48,
            samples: 2048,
            outliers: 200,
            outlier_half_width: 1.0,
            split: Some(0.3),
            crop: None,
            rotation: RotationScope::Uniform,
            translation: 1.0,
            format: CloudFormat::Xyz,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssembleConfig {
    pub complete_match: bool,
    pub refine_icp: bool,
    /// Pass only if the rotation error against `gt` is at most this (degrees).
    pub max_rotation_deg: Option<f64>,
    pub max_translation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditConfig {
    pub trials: usize,
    pub tol: f64,
    pub kernel_trials: usize,
    pub kernel_tol: f64,
    /// Point-count range of the clouds drawn when no inputs are given.
    pub min_points: usize,
    pub max_points: usize,
    pub break_swap_ties: bool,
    /// Make every value path scale invariant so translations stop scaling.
    pub break_homogeneity: bool,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            trials: 20,
            tol: 1e-9,
            kernel_trials: 100,
            kernel_tol: 1e-10,
            min_points: 64,
            max_points: 256,
            break_swap_ties: false,
            break_homogeneity: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        self.model_config.validate()?;
        let g = &self.gen;
        if let Some(s) = g.split {
            if !(s > 0.0 && s < 1.0) {
                bail!("gen.split must be in (0, 1), got {s}");
            }
        }
        if let Some(s) = g.crop {
            if !(s > 0.0 && s <= 1.0) {
                bail!("gen.crop must be in (0, 1], got {s}");
            }
        }
        if g.mesh.is_some() && g.cloud.is_some() {
            bail!("gen.mesh and gen.cloud are exclusive");
        }
        if g.samples == 0 || g.mesh_resolution < 3 {
            bail!("gen.samples must be positive and gen.mesh_resolution at least 3");
        }
        if !(g.outlier_half_width > 0.0) || !(g.translation >= 0.0) {
            bail!("gen.outlier_half_width must be positive and gen.translation non-negative");
        }
        let a = &self.audit;
        if a.trials == 0 || a.kernel_trials == 0 {
            bail!("audit trial counts must be positive");
        }
        if !(a.tol > 0.0 && a.kernel_tol > 0.0) {
            bail!("audit tolerances must be positive");
        }
        if a.min_points < 4 || a.min_points > a.max_points {
            bail!("audit point range must satisfy 4 <= min_points <= max_points");
        }
        for t in [self.assemble.max_rotation_deg, self.assemble.max_translation].into_iter().flatten() {
            if !(t >= 0.0) {
                bail!("assembly tolerances must be non-negative");
            }
        }
        Ok(())
    }
}
