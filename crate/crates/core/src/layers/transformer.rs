use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DMatrixView};
use rayon::prelude::*;

use super::NeighborGraph;
use crate::equi_kernel::{EdgeGeometry, Homogeneity, KernelSpec, SwapTie};
use crate::error::{BitrError, Result};
use crate::params::{export_matrix, ParamMap, ParamSource};
use crate::rep_theory::BiDegree;
use crate::scalar::Real;
use crate::tensor_field::{FeatureBlock, TensorField};

/// Channel count per degree.
pub type DegreeChannels = BTreeMap<BiDegree, usize>;

/// Shape of a transformer layer before weights are attached.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerShape {
    pub inputs: DegreeChannels,
    pub outputs: DegreeChannels,
    /// Channels per degree of the query and key features.
    pub key_channels: usize,
    /// Homogeneity of the value kernels; `Linear` drops self-interaction.
    pub value: Homogeneity,
    pub swap_tied: bool,
}

impl LayerShape {
    fn validate(&self) -> Result<()> {
        for (&d, &c) in self.inputs.iter().chain(&self.outputs) {
            d.validate()?;
            if c == 0 {
                return Err(BitrError::FeatureChannelMismatch(format!("degree {d} has zero channels")));
            }
        }
        if self.key_channels == 0 || self.inputs.is_empty() || self.outputs.is_empty() {
            return Err(BitrError::InvalidArgument("layer needs inputs, outputs and key channels".into()));
        }
        if self.swap_tied {
            for set in [&self.inputs, &self.outputs] {
                for (&d, &c) in set {
                    if set.get(&d.swapped()) != Some(&c) {
                        return Err(BitrError::DegreeMismatch(format!(
                            "swap-tied layer needs {} with the channels of {d}",
                            d.swapped()
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Per-degree weight matrices, shared between `d` and its swap partner when tied.
pub(crate) fn tied_matrices<T: Real>(
    degrees: impl Iterator<Item = BiDegree>,
    tied: bool,
    mut make: impl FnMut(BiDegree) -> Result<DMatrix<T>>,
) -> Result<BTreeMap<BiDegree, Arc<DMatrix<T>>>> {
    let mut out: BTreeMap<BiDegree, Arc<DMatrix<T>>> = BTreeMap::new();
    for d in degrees {
        let partner = d.swapped();
        let m = match out.get(&partner) {
            Some(shared) if tied && partner < d => Arc::clone(shared),
            _ => Arc::new(make(d)?),
        };
        out.insert(d, m);
    }
    Ok(out)
}

/// Whether `d` stores its own copy of a (possibly tied) per-degree weight.
pub(crate) fn owns_weight(d: BiDegree, tied: bool) -> bool {
    !tied || d <= d.swapped()
}

fn build_kernels<T: Real>(
    outputs: &DegreeChannels,
    inputs: &DegreeChannels,
    homogeneity: Homogeneity,
    tied: bool,
    name: &str,
    source: &mut dyn ParamSource<T>,
) -> Result<BTreeMap<(BiDegree, BiDegree), KernelSpec<T>>> {
    let mut out: BTreeMap<(BiDegree, BiDegree), KernelSpec<T>> = BTreeMap::new();
    for (&o, &c_out) in outputs {
        for (&i, &c_in) in inputs {
            let partner = (o.swapped(), i.swapped());
            let spec = if !tied {
                KernelSpec::build(i, o, c_in, c_out, homogeneity, SwapTie::Untied, &format!("{name}.{i}->{o}"), source)?
            } else if partner == (o, i) {
                KernelSpec::build(i, o, c_in, c_out, homogeneity, SwapTie::SelfPartner, &format!("{name}.{i}->{o}"), source)?
            } else if partner < (o, i) {
                // BTreeMap order guarantees the owner was built already.
                KernelSpec::mirror(&out[&partner])?
            } else {
                KernelSpec::build(i, o, c_in, c_out, homogeneity, SwapTie::Owner, &format!("{name}.{i}->{o}"), source)?
            };
            out.insert((o, i), spec);
        }
    }
    Ok(out)
}

/// Weights of one SE(3)×SE(3)-transformer layer.
#[derive(Debug, Clone)]
pub struct LayerParams<T: Real> {
    pub shape: LayerShape,
    /// `W^o`, `c_out × c_in`, for degrees in both sets; empty for linear values.
    pub self_interaction: BTreeMap<BiDegree, Arc<DMatrix<T>>>,
    /// `W_Q^o`, `key_channels × c_in`, for every input degree.
    pub query: BTreeMap<BiDegree, Arc<DMatrix<T>>>,
    /// Key kernels keyed by (key degree, input degree); key degrees are the input degrees.
    pub key_kernels: BTreeMap<(BiDegree, BiDegree), KernelSpec<T>>,
    /// Value kernels keyed by (output degree, input degree).
    pub value_kernels: BTreeMap<(BiDegree, BiDegree), KernelSpec<T>>,
    jmax: usize,
}

impl<T: Real> LayerParams<T> {
    pub fn build(shape: LayerShape, name: &str, source: &mut dyn ParamSource<T>) -> Result<Self> {
        shape.validate()?;
        let tied = shape.swap_tied;
        let self_interaction = if shape.value == Homogeneity::Invariant {
            let shared: Vec<BiDegree> = shape
                .outputs
                .keys()
                .copied()
                .filter(|d| shape.inputs.contains_key(d))
                .collect();
            tied_matrices(shared.into_iter(), tied, |d| {
                source.matrix(&format!("{name}.self.{d}"), shape.outputs[&d], shape.inputs[&d])
            })?
        } else {
            BTreeMap::new()
        };
        let query = tied_matrices(shape.inputs.keys().copied(), tied, |d| {
            source.matrix(&format!("{name}.query.{d}"), shape.key_channels, shape.inputs[&d])
        })?;
        let key_degrees: DegreeChannels = shape.inputs.keys().map(|&d| (d, shape.key_channels)).collect();
        let key_kernels = build_kernels(
            &key_degrees,
            &shape.inputs,
            Homogeneity::Invariant,
            tied,
            &format!("{name}.key"),
            source,
        )?;
        let value_kernels = build_kernels(
            &shape.outputs,
            &shape.inputs,
            shape.value,
            tied,
            &format!("{name}.value"),
            source,
        )?;
        let jmax = key_kernels
            .values()
            .chain(value_kernels.values())
            .map(KernelSpec::max_j)
            .max()
            .unwrap_or(0);
        Ok(LayerParams {
            shape,
            self_interaction,
            query,
            key_kernels,
            value_kernels,
            jmax,
        })
    }

    pub fn export(&self, name: &str, out: &mut ParamMap) {
        let tied = self.shape.swap_tied;
        for (&d, w) in &self.self_interaction {
            if owns_weight(d, tied) {
                export_matrix(out, format!("{name}.self.{d}"), w);
            }
        }
        for (&d, w) in &self.query {
            if owns_weight(d, tied) {
                export_matrix(out, format!("{name}.query.{d}"), w);
            }
        }
        for (&(o, i), spec) in &self.key_kernels {
            spec.export(&format!("{name}.key.{i}->{o}"), out);
        }
        for (&(o, i), spec) in &self.value_kernels {
            spec.export(&format!("{name}.value.{i}->{o}"), out);
        }
    }

    fn check_input(&self, f: &TensorField<T>, graph: &NeighborGraph) -> Result<()> {
        if graph.len() != f.len() {
            return Err(BitrError::LengthMismatch {
                left: graph.len(),
                right: f.len(),
            });
        }
        if !f.degrees().eq(self.shape.inputs.keys().copied()) {
            let have: Vec<String> = f.degrees().map(|d| d.to_string()).collect();
            let want: Vec<String> = self.shape.inputs.keys().map(|d| d.to_string()).collect();
            return Err(BitrError::DegreeMismatch(format!(
                "layer expects degrees [{}], field has [{}]",
                want.join(", "),
                have.join(", ")
            )));
        }
        for (d, b) in &f.blocks {
            if b.channels != self.shape.inputs[d] {
                return Err(BitrError::FeatureChannelMismatch(format!(
                    "degree {d}: layer expects {} channels, field has {}",
                    self.shape.inputs[d], b.channels
                )));
            }
        }
        Ok(())
    }

    fn queries(&self, f: &TensorField<T>, u: usize) -> BTreeMap<BiDegree, DMatrix<T>> {
        self.query
            .iter()
            .map(|(d, w)| (*d, &**w * f.blocks[d].point(u)))
            .collect()
    }

    fn logits(&self, f: &TensorField<T>, u: usize, graph: &NeighborGraph, q: &BTreeMap<BiDegree, DMatrix<T>>) -> Vec<T> {
        graph.neighbors[u]
            .iter()
            .map(|&v| {
                let geom = EdgeGeometry::new(&f.points[v].sub(&f.points[u]), self.jmax);
                let mut logit = T::zero();
                for (&o, qo) in q {
                    let mut k = DMatrix::zeros(qo.nrows(), qo.ncols());
                    for (&i, block) in &f.blocks {
                        k += apply_kernel(&self.key_kernels[&(o, i)], &geom, block.point(v));
                    }
                    logit += qo.dot(&k);
                }
                logit
            })
            .collect()
    }
}

/// `Σ_ci W_{co,ci}(z) f_ci` for every output channel, as a `c_out × dim_o` slab.
pub(crate) fn apply_kernel<T: Real>(
    spec: &KernelSpec<T>,
    geom: &EdgeGeometry<T>,
    fv: DMatrixView<'_, T>,
) -> DMatrix<T> {
    let angular = spec.angular(geom);
    let radial = spec.radial(geom.n1, geom.n2);
    let ns = spec.slots.len();
    let mut out = DMatrix::zeros(spec.c_out, spec.output.dim());
    for (s, a) in angular.iter().enumerate() {
        let phi = DMatrix::from_fn(spec.c_out, spec.c_in, |co, ci| radial[(co * spec.c_in + ci) * ns + s]);
        // Row ci of fv Aᵀ is (A f_ci)ᵀ.
        out += phi * (fv * a.transpose());
    }
    out
}

/// Softmax with the maximum subtracted first.
pub(crate) fn softmax<T: Real>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().reduce(T::max).unwrap_or_else(T::zero);
    let exps: Vec<T> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum = exps.iter().copied().fold(T::zero(), |a, b| a + b);
    exps.into_iter().map(|e| e / sum).collect()
}

/// Attention weights `α_uv`, one row per point over its neighbours.
pub fn attention_weights<T: Real>(
    params: &LayerParams<T>,
    f: &TensorField<T>,
    graph: &NeighborGraph,
) -> Result<Vec<Vec<T>>> {
    params.check_input(f, graph)?;
    Ok((0..f.len())
        .into_par_iter()
        .map(|u| {
            let q = params.queries(f, u);
            softmax(&params.logits(f, u, graph, &q))
        })
        .collect())
}

/// One SE(3)×SE(3)-transformer layer:
/// `f_out^o(u) = W^o F^o(u) + Σ_v α_uv Σ_i W_V^{o,i}(z_v − z_u) f^i(z_v)`.
pub fn transformer_layer<T: Real>(
    params: &LayerParams<T>,
    f: &TensorField<T>,
    graph: &NeighborGraph,
) -> Result<TensorField<T>> {
    params.check_input(f, graph)?;
    let per_point: Vec<BTreeMap<BiDegree, DMatrix<T>>> = (0..f.len())
        .into_par_iter()
        .map(|u| {
            let q = params.queries(f, u);
            let alpha = softmax(&params.logits(f, u, graph, &q));
            let mut out: BTreeMap<BiDegree, DMatrix<T>> = params
                .shape
                .outputs
                .iter()
                .map(|(&o, &c)| {
                    let init = match params.self_interaction.get(&o) {
                        Some(w) => &**w * f.blocks[&o].point(u),
                        None => DMatrix::zeros(c, o.dim()),
                    };
                    (o, init)
                })
                .collect();
            for (&v, &a) in graph.neighbors[u].iter().zip(&alpha) {
                let geom = EdgeGeometry::new(&f.points[v].sub(&f.points[u]), params.jmax);
                for (&o, acc) in out.iter_mut() {
                    for (&i, block) in &f.blocks {
                        let m = apply_kernel(&params.value_kernels[&(o, i)], &geom, block.point(v));
                        *acc += m * a;
                    }
                }
            }
            out
        })
        .collect();
    let mut field = TensorField::new(f.points.clone());
    for (&o, &c) in &params.shape.outputs {
        let mut block = FeatureBlock::zeros(o, c, f.len());
        for (u, slabs) in per_point.iter().enumerate() {
            block.point_mut(u).copy_from(&slabs[&o]);
        }
        field.insert(block)?;
    }
    Ok(field)
}

/// The SE(3)-transformer layer on a 3-D cloud: all degrees are `(p, 0)` and
/// the second factor of every point is taken as the origin.
pub fn se3_layer<T: Real>(
    params: &LayerParams<T>,
    f: &TensorField<T>,
    graph: &NeighborGraph,
) -> Result<TensorField<T>> {
    let degrees = params.shape.inputs.keys().chain(params.shape.outputs.keys());
    if let Some(d) = degrees.chain(f.blocks.keys()).find(|d| d.q != 0) {
        return Err(BitrError::DegreeMismatch(format!("SE(3) layer cannot carry degree {d}")));
    }
    if f.points.iter().all(|z| z.z2 == nalgebra::Vector3::zeros()) {
        return transformer_layer(params, f, graph);
    }
    let mut embedded = f.clone();
    for z in &mut embedded.points {
        z.z2.fill(T::zero());
    }
    let mut out = transformer_layer(params, &embedded, graph)?;
    out.points = f.points.clone();
    Ok(out)
}
