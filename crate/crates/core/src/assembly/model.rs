use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, Vector3};
use serde::{Deserialize, Serialize};

use super::projection::{se3_project, AssemblyResult};
use crate::equi_kernel::Homogeneity;
use crate::error::{BitrError, Result};
use crate::geometry_io::{estimate_normals, seeded_rng};
use crate::layers::{
    elu_layer, knn_graph, se3_layer, transformer_layer, DegreeChannels, EluParams, LayerParams,
    LayerShape,
};
use crate::params::{ParamMap, ParamSource, RandomInit, StoredParams};
use crate::rep_theory::{BiDegree, MAX_DEGREE};
use crate::scalar::Real;
use crate::tensor_field::{FeatureBlock, Point6, PointCloud, RigidTransform, TensorField};

pub const SCHEMA_VERSION: u32 = 1;

/// Where scale homogeneity enters the bi-transformer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleMode {
    /// Invariant layers followed by a final linear value path without
    /// self-interaction: rotations are scale invariant, translations scale.
    Chain,
    /// Every value path linear; breaks scale equivariance through attention.
    AllHomogeneous,
    /// Every value path invariant; translations no longer scale.
    AllInvariant,
}

/// Hyperparameters of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Number of key points `L` per cloud.
    pub keypoints: usize,
    /// Neighbourhood size, capped at one less than the point count.
    pub k: usize,
    pub channels: usize,
    pub extractor_layers: usize,
    pub bi_layers: usize,
    /// Largest degree per factor in hidden features.
    pub max_degree: usize,
    /// Feed per-point normals to the extractor as a degree-1 channel.
    /// Clouds without normals get them estimated from `normal_k` neighbours.
    pub use_normals: bool,
    pub normal_k: usize,
    pub swap_tied: bool,
    pub scale_mode: ScaleMode,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            keypoints: 32,
            k: 24,
            channels: 4,
            extractor_layers: 2,
            bi_layers: 2,
            max_degree: 1,
            use_normals: true,
            normal_k: 16,
            swap_tied: true,
            scale_mode: ScaleMode::Chain,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(BitrError::InvalidArgument(m.to_owned()));
        if self.keypoints < 2 {
            return bad("at least two key points are required");
        }
        if self.use_normals && self.normal_k < 3 {
            return bad("normal_k must be at least 3");
        }
        if self.k == 0 || self.channels == 0 {
            return bad("neighbourhood size and channel count must be positive");
        }
        if self.extractor_layers < 2 {
            return bad("the extractor needs at least two layers");
        }
        if self.bi_layers == 0 {
            return bad("at least one bi-transformer layer is required");
        }
        if self.max_degree == 0 || 2 * self.max_degree > MAX_DEGREE {
            return bad("max_degree must be in 1..=2");
        }
        Ok(())
    }
}

/// Shared SE(3)-transformer producing key-point weights.
#[derive(Debug, Clone)]
pub struct ExtractorParams<T: Real> {
    pub layers: Vec<LayerParams<T>>,
    pub elus: Vec<EluParams<T>>,
    pub keypoints: usize,
    pub use_normals: bool,
    pub normal_k: usize,
}

fn degrees_up_to(max: usize, channels: usize, bi: bool) -> DegreeChannels {
    let mut out = BTreeMap::new();
    for p in 0..=max {
        for q in 0..=if bi { max } else { 0 } {
            out.insert(BiDegree::new(p, q), channels);
        }
    }
    out
}

impl<T: Real> ExtractorParams<T> {
    fn build(config: &ModelConfig, source: &mut dyn ParamSource<T>) -> Result<Self> {
        let c = config.channels;
        let hidden = degrees_up_to(config.max_degree, c, false);
        let mut input: DegreeChannels = BTreeMap::from([(BiDegree::SCALAR, 1)]);
        if config.use_normals {
            input.insert(BiDegree::new(1, 0), 1);
        }
        let n = config.extractor_layers;
        let mut layers = Vec::with_capacity(n);
        let mut elus = Vec::with_capacity(n - 1);
        for l in 0..n {
            let name = format!("extractor.{l}");
            let last = l + 1 == n;
            let mut inputs = if l == 0 { input.clone() } else { hidden.clone() };
            if last {
                // Own degree-0 channels plus the pooled partner's.
                inputs.insert(BiDegree::SCALAR, 2 * c);
            }
            let outputs = if last {
                BTreeMap::from([(BiDegree::SCALAR, config.keypoints)])
            } else {
                hidden.clone()
            };
            let shape = LayerShape {
                inputs,
                outputs,
                key_channels: c,
                value: Homogeneity::Invariant,
                swap_tied: false,
            };
            layers.push(LayerParams::build(shape, &name, source)?);
            if !last {
                elus.push(EluParams::build(hidden.clone(), false, &format!("{name}.elu"), source)?);
            }
        }
        Ok(ExtractorParams {
            layers,
            elus,
            keypoints: config.keypoints,
            use_normals: config.use_normals,
            normal_k: config.normal_k,
        })
    }

    fn export(&self, out: &mut ParamMap) {
        for (l, layer) in self.layers.iter().enumerate() {
            layer.export(&format!("extractor.{l}"), out);
        }
        for (l, elu) in self.elus.iter().enumerate() {
            elu.export(&format!("extractor.{l}.elu"), out);
        }
    }
}

/// Input field of the extractor: a constant scalar and optional normals.
fn cloud_field<T: Real>(cloud: &PointCloud<T>, params: &ExtractorParams<T>) -> Result<TensorField<T>> {
    let points: Vec<Point6<T>> = cloud.points.iter().map(|p| Point6::embed(*p)).collect();
    let mut f = TensorField::constant(points);
    if params.use_normals {
        let estimated;
        let normals = match &cloud.normals {
            Some(n) => n,
            None => {
                let k = params.normal_k.min(cloud.len());
                estimated = estimate_normals(cloud, k)?.normals.expect("estimated normals");
                &estimated
            }
        };
        let data = DMatrix::from_fn(normals.len(), 3, |u, a| normals[u][a]);
        f.insert(FeatureBlock::new(BiDegree::new(1, 0), 1, data)?)?;
    }
    Ok(f)
}

fn softmax_in_place<T: Real>(w: &mut [T]) {
    let max = w.iter().copied().reduce(T::max).unwrap_or_else(T::zero);
    let mut sum = T::zero();
    for x in w.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in w.iter_mut() {
        *x /= sum;
    }
}

/// Rows of convex weights, one per key point.
pub type Weights<T> = Vec<Vec<T>>;
pub type KeyPoints<T> = Vec<Vector3<T>>;

/// Key-point weights per cloud: `weights[l][u]` is the share of point `u`
/// in key point `l`, and each row sums to one.
pub fn keypoint_weights<T: Real>(
    params: &ExtractorParams<T>,
    x: &PointCloud<T>,
    y: &PointCloud<T>,
    k: usize,
) -> Result<(Weights<T>, Weights<T>)> {
    for cloud in [x, y] {
        if cloud.is_empty() {
            return Err(BitrError::EmptyCloud);
        }
        if cloud.len() < 2 {
            return Err(BitrError::InvalidNeighborCount { k, points: cloud.len() });
        }
    }
    let hidden = |cloud: &PointCloud<T>| -> Result<(TensorField<T>, _)> {
        let mut f = cloud_field(cloud, params)?;
        let graph = knn_graph(&f.points, k.min(cloud.len() - 1))?;
        let body = &params.layers[..params.layers.len() - 1];
        for (layer, elu) in body.iter().zip(&params.elus) {
            f = elu_layer(elu, &se3_layer(layer, &f, &graph)?)?;
        }
        Ok((f, graph))
    };
    let (hx, gx) = hidden(x)?;
    let (hy, gy) = hidden(y)?;
    let pooled_x = hx.block(BiDegree::SCALAR)?.mean_pool();
    let pooled_y = hy.block(BiDegree::SCALAR)?.mean_pool();
    let last = params.layers.last().expect("extractor has layers");
    let weights = |mut h: TensorField<T>, graph, partner: &DMatrix<T>| -> Result<Vec<Vec<T>>> {
        let own = h.block(BiDegree::SCALAR)?.clone();
        let c = own.channels;
        let mut fused = FeatureBlock::zeros(BiDegree::SCALAR, 2 * c, h.len());
        for u in 0..h.len() {
            let mut slab = fused.point_mut(u);
            slab.rows_mut(0, c).copy_from(&own.point(u));
            slab.rows_mut(c, c).copy_from(partner);
        }
        h.insert(fused)?;
        let scores = se3_layer(last, &h, graph)?;
        let s = scores.block(BiDegree::SCALAR)?;
        Ok((0..params.keypoints)
            .map(|l| {
                let mut w: Vec<T> = (0..h.len()).map(|u| s.point(u)[(l, 0)]).collect();
                softmax_in_place(&mut w);
                w
            })
            .collect())
    };
    Ok((weights(hx, &gx, &pooled_y)?, weights(hy, &gy, &pooled_x)?))
}

fn combine<T: Real>(weights: &[Vec<T>], cloud: &PointCloud<T>) -> Vec<Vector3<T>> {
    // Summing offsets from the centroid keeps rounding relative to the cloud
    // extent rather than to its absolute position.
    let c = cloud.centroid().expect("key points come from non-empty clouds");
    weights
        .iter()
        .map(|w| {
            c + w
                .iter()
                .zip(&cloud.points)
                .fold(Vector3::zeros(), |acc, (&a, p)| acc + (p - c) * a)
        })
        .collect()
}

/// Key points `X̃ = softmax(F⁰_X) X` and `Ỹ = softmax(F⁰_Y) Y`, each a convex
/// combination of its cloud.
pub fn extract_keypoints<T: Real>(
    params: &ExtractorParams<T>,
    x: &PointCloud<T>,
    y: &PointCloud<T>,
    k: usize,
) -> Result<(KeyPoints<T>, KeyPoints<T>)> {
    let (wx, wy) = keypoint_weights(params, x, y, k)?;
    Ok((combine(&wx, x), combine(&wy, y)))
}

/// Concatenates corresponding key points into 6-D points.
pub fn merge_pc<T: Real>(x: &[Vector3<T>], y: &[Vector3<T>]) -> Result<Vec<Point6<T>>> {
    if x.len() != y.len() {
        return Err(BitrError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(x.iter().zip(y).map(|(a, b)| Point6::new(*a, *b)).collect())
}

/// One bi-transformer stage and the rectifier that follows it, if any.
#[derive(Debug, Clone)]
pub struct BiStage<T: Real> {
    pub layer: LayerParams<T>,
    pub elu: Option<EluParams<T>>,
}

/// Untrained or loaded BITR model.
#[derive(Debug, Clone)]
pub struct BitrModel<T: Real> {
    pub config: ModelConfig,
    pub extractor: ExtractorParams<T>,
    pub stages: Vec<BiStage<T>>,
}

/// Serialized model: configuration header plus named weight arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    pub schema_version: u32,
    pub config: ModelConfig,
    pub params: ParamMap,
}

impl<T: Real> BitrModel<T> {
    pub fn build(config: ModelConfig, source: &mut dyn ParamSource<T>) -> Result<Self> {
        config.validate()?;
        let extractor = ExtractorParams::build(&config, source)?;
        let c = config.channels;
        let hidden = degrees_up_to(config.max_degree, c, true);
        let output: DegreeChannels = [(1, 1), (1, 0), (0, 1)]
            .into_iter()
            .map(|(p, q)| (BiDegree::new(p, q), 1))
            .collect();
        let n = config.bi_layers;
        let mut stages = Vec::with_capacity(n);
        for l in 0..n {
            let last = l + 1 == n;
            let name = format!("bi.{l}");
            let inputs = if l == 0 {
                BTreeMap::from([(BiDegree::SCALAR, 1)])
            } else {
                hidden.clone()
            };
            let outputs = if last { output.clone() } else { hidden.clone() };
            let value = match config.scale_mode {
                ScaleMode::Chain if last => Homogeneity::Linear,
                ScaleMode::Chain | ScaleMode::AllInvariant => Homogeneity::Invariant,
                ScaleMode::AllHomogeneous => Homogeneity::Linear,
            };
            let shape = LayerShape {
                inputs,
                outputs,
                key_channels: c,
                value,
                swap_tied: config.swap_tied,
            };
            let layer = LayerParams::build(shape, &name, source)?;
            let elu = if last {
                None
            } else {
                Some(EluParams::build(hidden.clone(), config.swap_tied, &format!("{name}.elu"), source)?)
            };
            stages.push(BiStage { layer, elu });
        }
        Ok(BitrModel {
            config,
            extractor,
            stages,
        })
    }

    /// Model with weights drawn from a seeded generator.
    pub fn random(config: ModelConfig, seed: u64) -> Result<Self> {
        Self::build(config, &mut RandomInit::new(seeded_rng(seed)))
    }

    pub fn to_doc(&self) -> ModelDoc {
        let mut params = ParamMap::new();
        self.extractor.export(&mut params);
        for (l, stage) in self.stages.iter().enumerate() {
            stage.layer.export(&format!("bi.{l}"), &mut params);
            if let Some(elu) = &stage.elu {
                elu.export(&format!("bi.{l}.elu"), &mut params);
            }
        }
        ModelDoc {
            schema_version: SCHEMA_VERSION,
            config: self.config.clone(),
            params,
        }
    }

    pub fn from_doc(doc: &ModelDoc) -> Result<Self> {
        if doc.schema_version != SCHEMA_VERSION {
            return Err(BitrError::ModelFormat(format!(
                "unsupported schema version {}",
                doc.schema_version
            )));
        }
        let mut source = StoredParams::new(&doc.params);
        let model = Self::build(doc.config.clone(), &mut source)?;
        source.finish()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string(&self.to_doc())?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(&fs::read_to_string(path)?)?;
        Self::from_doc(&doc)
    }

    /// Bi-transformer output on the merged key points.
    pub fn bi_features(&self, keypoints: Vec<Point6<T>>) -> Result<TensorField<T>> {
        let graph = knn_graph(&keypoints, self.config.k.min(keypoints.len().saturating_sub(1)).max(1))?;
        let mut f = TensorField::constant(keypoints);
        for stage in &self.stages {
            f = transformer_layer(&stage.layer, &f, &graph)?;
            if let Some(elu) = &stage.elu {
                f = elu_layer(elu, &f)?;
            }
        }
        Ok(f)
    }
}

/// `g = Φ_P ∘ Φ_S (X, Y)`: the transform taking `X` onto `Y`.
pub fn bitr_forward<T: Real>(
    model: &BitrModel<T>,
    x: &PointCloud<T>,
    y: &PointCloud<T>,
) -> Result<AssemblyResult<T>> {
    let (kx, ky) = extract_keypoints(&model.extractor, x, y, model.config.k)?;
    let f = model.bi_features(merge_pc(&kx, &ky)?)?;
    se3_project(&f, &kx, &ky)
}

/// Complete matching with an untrained swap-tied model:
/// `Φ(X, Y) ∘ Φ(X, X)`, exact whenever `Y` is a rigid copy of `X`.
pub fn complete_match<T: Real>(
    model: &BitrModel<T>,
    x: &PointCloud<T>,
    y: &PointCloud<T>,
) -> Result<RigidTransform<T>> {
    if !model.config.swap_tied {
        return Err(BitrError::NotSwapTied);
    }
    let xy = bitr_forward(model, x, y)?.transform;
    let xx = bitr_forward(model, x, x)?.transform;
    Ok(xy.compose(&xx))
}
