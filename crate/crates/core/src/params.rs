//! Named weight storage shared by random initialization and model files.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{BitrError, Result};
use crate::scalar::{lit, to_f64, Real};

/// Supplies weight matrices by name while a model is being built.
pub trait ParamSource<T: Real> {
    fn matrix(&mut self, name: &str, rows: usize, cols: usize) -> Result<DMatrix<T>>;
}

/// Draws every weight uniformly from `[-a, a]` with `a = 1 / sqrt(cols)`.
pub struct RandomInit<R> {
    pub rng: R,
}

impl<R> RandomInit<R> {
    pub fn new(rng: R) -> Self {
        RandomInit { rng }
    }
}

impl<T: Real, R: Rng> ParamSource<T> for RandomInit<R> {
    fn matrix(&mut self, _name: &str, rows: usize, cols: usize) -> Result<DMatrix<T>> {
        let a = 1.0 / (cols.max(1) as f64).sqrt();
        Ok(DMatrix::from_fn(rows, cols, |_, _| {
            lit(self.rng.random_range(-a..=a))
        }))
    }
}

/// Named flat arrays, each a matrix in column-major order.
pub type ParamMap = BTreeMap<String, Vec<f64>>;

/// Reads weights back from a [`ParamMap`], tracking which names were used.
pub struct StoredParams<'a> {
    map: &'a ParamMap,
    used: BTreeSet<String>,
}

impl<'a> StoredParams<'a> {
    pub fn new(map: &'a ParamMap) -> Self {
        StoredParams {
            map,
            used: BTreeSet::new(),
        }
    }

    /// Fails if the map holds names the model never asked for.
    pub fn finish(self) -> Result<()> {
        match self.map.keys().find(|k| !self.used.contains(*k)) {
            Some(extra) => Err(BitrError::ModelFormat(format!("unexpected parameter {extra}"))),
            None => Ok(()),
        }
    }
}

impl<T: Real> ParamSource<T> for StoredParams<'_> {
    fn matrix(&mut self, name: &str, rows: usize, cols: usize) -> Result<DMatrix<T>> {
        let values = self
            .map
            .get(name)
            .ok_or_else(|| BitrError::ModelFormat(format!("missing parameter {name}")))?;
        if values.len() != rows * cols {
            return Err(BitrError::ModelFormat(format!(
                "parameter {name} has {} values, expected {rows}x{cols}",
                values.len()
            )));
        }
        self.used.insert(name.to_owned());
        Ok(DMatrix::from_iterator(rows, cols, values.iter().map(|&x| lit(x))))
    }
}

/// Collects weights under their names.
pub fn export_matrix<T: Real>(out: &mut ParamMap, name: String, m: &DMatrix<T>) {
    out.insert(name, m.iter().map(|&x| to_f64(x)).collect());
}
