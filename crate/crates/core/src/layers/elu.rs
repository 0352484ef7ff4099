use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::transformer::{owns_weight, tied_matrices, DegreeChannels};
use crate::error::{BitrError, Result};
use crate::params::{export_matrix, ParamMap, ParamSource};
use crate::rep_theory::BiDegree;
use crate::scalar::Real;
use crate::tensor_field::{FeatureBlock, TensorField};

/// Weights of an equivariant rectifier: `W_μ`, `W_ν` (`c × c`) per degree.
#[derive(Debug, Clone)]
pub struct EluParams<T: Real> {
    pub channels: DegreeChannels,
    pub swap_tied: bool,
    pub mu: BTreeMap<BiDegree, Arc<DMatrix<T>>>,
    pub nu: BTreeMap<BiDegree, Arc<DMatrix<T>>>,
}

impl<T: Real> EluParams<T> {
    pub fn build(
        channels: DegreeChannels,
        swap_tied: bool,
        name: &str,
        source: &mut dyn ParamSource<T>,
    ) -> Result<Self> {
        if swap_tied {
            if let Some((d, _)) = channels.iter().find(|(d, c)| channels.get(&d.swapped()) != Some(c)) {
                return Err(BitrError::DegreeMismatch(format!(
                    "swap-tied rectifier needs {} alongside {d}",
                    d.swapped()
                )));
            }
        }
        let mu = tied_matrices(channels.keys().copied(), swap_tied, |d| {
            source.matrix(&format!("{name}.mu.{d}"), channels[&d], channels[&d])
        })?;
        let nu = tied_matrices(channels.keys().copied(), swap_tied, |d| {
            source.matrix(&format!("{name}.nu.{d}"), channels[&d], channels[&d])
        })?;
        Ok(EluParams {
            channels,
            swap_tied,
            mu,
            nu,
        })
    }

    pub fn export(&self, name: &str, out: &mut ParamMap) {
        for d in self.channels.keys() {
            if owns_weight(*d, self.swap_tied) {
                export_matrix(out, format!("{name}.mu.{d}"), &self.mu[d]);
                export_matrix(out, format!("{name}.nu.{d}"), &self.nu[d]);
            }
        }
    }
}

/// Per point, degree and channel: `F_μ` when `⟨F_μ, F_ν⟩ >= 0`, otherwise
/// `F_μ` with its component along `F_ν` removed.
pub fn elu_layer<T: Real>(params: &EluParams<T>, f: &TensorField<T>) -> Result<TensorField<T>> {
    let mut out = TensorField::new(f.points.clone());
    for (&d, block) in &f.blocks {
        let (mu, nu) = match (params.mu.get(&d), params.nu.get(&d)) {
            (Some(mu), Some(nu)) if mu.ncols() == block.channels => (mu, nu),
            _ => {
                return Err(BitrError::FeatureChannelMismatch(format!(
                    "rectifier has no {}-channel weights for degree {d}",
                    block.channels
                )))
            }
        };
        let mut result = FeatureBlock::zeros(d, block.channels, f.len());
        for u in 0..f.len() {
            let fu = block.point(u);
            let mut fm = &**mu * fu;
            let fn_ = &**nu * fu;
            for c in 0..block.channels {
                let dot = fm.row(c).dot(&fn_.row(c));
                let nn = fn_.row(c).norm_squared();
                if dot < T::zero() && nn > T::zero() {
                    let scale = dot / nn;
                    let proj = fn_.row(c) * scale;
                    let mut row = fm.row_mut(c);
                    row -= proj;
                }
            }
            result.point_mut(u).copy_from(&fm);
        }
        out.insert(result)?;
    }
    if out.blocks.len() != params.channels.len() {
        return Err(BitrError::DegreeMismatch("field degrees differ from the rectifier's".into()));
    }
    Ok(out)
}
