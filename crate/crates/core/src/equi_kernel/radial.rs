use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::params::{export_matrix, ParamMap, ParamSource};
use crate::scalar::{from_usize, Real};

/// Width of the hidden stages of every radial network.
pub const RADIAL_HIDDEN: usize = 16;

/// Positive homogeneity degree of a radial network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Homogeneity {
    /// `φ(c a, c b) = φ(a, b)`.
    Invariant,
    /// `φ(c a, c b) = c φ(a, b)`.
    Linear,
}

impl Homogeneity {
    pub fn degree(self) -> i32 {
        match self {
            Homogeneity::Invariant => 0,
            Homogeneity::Linear => 1,
        }
    }
}

/// Bias-free network `(‖z¹‖, ‖z²‖) -> R^outputs`.
///
/// Linear stages alternate with rectifiers; the invariant variant follows
/// each rectifier with a shift-free, epsilon-free layer normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialNet<T: Real> {
    pub homogeneity: Homogeneity,
    pub w1: DMatrix<T>,
    pub w2: DMatrix<T>,
    pub head: DMatrix<T>,
}

impl<T: Real> RadialNet<T> {
    pub fn build(
        homogeneity: Homogeneity,
        outputs: usize,
        name: &str,
        source: &mut dyn ParamSource<T>,
    ) -> Result<Self> {
        Ok(RadialNet {
            homogeneity,
            w1: source.matrix(&format!("{name}.w1"), RADIAL_HIDDEN, 2)?,
            w2: source.matrix(&format!("{name}.w2"), RADIAL_HIDDEN, RADIAL_HIDDEN)?,
            head: source.matrix(&format!("{name}.head"), outputs, RADIAL_HIDDEN)?,
        })
    }

    pub fn outputs(&self) -> usize {
        self.head.nrows()
    }

    pub fn export(&self, name: &str, out: &mut ParamMap) {
        export_matrix(out, format!("{name}.w1"), &self.w1);
        export_matrix(out, format!("{name}.w2"), &self.w2);
        export_matrix(out, format!("{name}.head"), &self.head);
    }

    pub fn eval(&self, n1: T, n2: T) -> DVector<T> {
        let x = DVector::from_column_slice(&[n1, n2]);
        let mut h = &self.w1 * x;
        self.activate(&mut h);
        let mut h = &self.w2 * h;
        self.activate(&mut h);
        &self.head * h
    }

    fn activate(&self, h: &mut DVector<T>) {
        h.apply(|x| *x = x.max(T::zero()));
        if self.homogeneity == Homogeneity::Invariant {
            layer_norm(h);
        }
    }
}

/// Normalizes to zero mean and unit variance; a constant vector maps to zero.
fn layer_norm<T: Real>(h: &mut DVector<T>) {
    let n = from_usize::<T>(h.len());
    let mean = h.sum() / n;
    h.apply(|x| *x -= mean);
    let std = (h.norm_squared() / n).sqrt();
    if std > T::zero() {
        *h /= std;
    } else {
        h.fill(T::zero());
    }
}

/// Radial values for `(n1, n2)`, one per output of `net`.
pub fn radial_eval<T: Real>(net: &RadialNet<T>, n1: T, n2: T) -> DVector<T> {
    net.eval(n1, n2)
}
