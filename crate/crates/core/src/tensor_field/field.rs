use std::collections::BTreeMap;

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut, DVector, Vector3};

use super::{BiRigid, RigidTransform};
use crate::error::{BitrError, Result};
use crate::rep_theory::{irrep_dim, wigner_stack, BiDegree};
use crate::scalar::{from_usize, lit, to_f64, Real};

/// Raw 3-D points with an optional per-point normal channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud<T: Real> {
    pub points: Vec<Vector3<T>>,
    pub normals: Option<Vec<Vector3<T>>>,
}

impl<T: Real> PointCloud<T> {
    pub fn new(points: Vec<Vector3<T>>) -> Self {
        PointCloud {
            points,
            normals: None,
        }
    }

    pub fn with_normals(points: Vec<Vector3<T>>, normals: Vec<Vector3<T>>) -> Result<Self> {
        if points.len() != normals.len() {
            return Err(BitrError::LengthMismatch {
                left: points.len(),
                right: normals.len(),
            });
        }
        Ok(PointCloud {
            points,
            normals: Some(normals),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Result<Vector3<T>> {
        if self.is_empty() {
            return Err(BitrError::EmptyCloud);
        }
        let sum = self.points.iter().fold(Vector3::zeros(), |acc, p| acc + p);
        Ok(sum / from_usize::<T>(self.len()))
    }

    /// Moves points by `g`; normals are rotated.
    pub fn transformed(&self, g: &RigidTransform<T>) -> Self {
        PointCloud {
            points: self.points.iter().map(|p| g.apply(p)).collect(),
            normals: self
                .normals
                .as_ref()
                .map(|ns| ns.iter().map(|n| g.r * n).collect()),
        }
    }

    /// Scales point coordinates; normals are left unit length.
    pub fn scaled(&self, c: T) -> Self {
        PointCloud {
            points: self.points.iter().map(|p| p * c).collect(),
            normals: self.normals.clone(),
        }
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        PointCloud {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            normals: self
                .normals
                .as_ref()
                .map(|ns| indices.iter().map(|&i| ns[i]).collect()),
        }
    }

    pub fn cast<U: Real>(&self) -> PointCloud<U> {
        let conv = |v: &Vector3<T>| v.map(|x| lit::<U>(to_f64(x)));
        PointCloud {
            points: self.points.iter().map(conv).collect(),
            normals: self.normals.as_ref().map(|ns| ns.iter().map(conv).collect()),
        }
    }
}

/// Point of the merged 6-D space, `z = z1 ⊕ z2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point6<T: Real> {
    pub z1: Vector3<T>,
    pub z2: Vector3<T>,
}

impl<T: Real> Point6<T> {
    pub fn new(z1: Vector3<T>, z2: Vector3<T>) -> Self {
        Point6 { z1, z2 }
    }

    /// Embeds a 3-D point with `z2 = 0`.
    pub fn embed(z1: Vector3<T>) -> Self {
        Point6 {
            z1,
            z2: Vector3::zeros(),
        }
    }

    pub fn swapped(&self) -> Self {
        Point6 {
            z1: self.z2,
            z2: self.z1,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Point6 {
            z1: self.z1 - other.z1,
            z2: self.z2 - other.z2,
        }
    }

    pub fn scaled(&self, c: T) -> Self {
        Point6 {
            z1: self.z1 * c,
            z2: self.z2 * c,
        }
    }

    pub fn acted(&self, g: &BiRigid<T>) -> Self {
        Point6 {
            z1: g.g1.apply(&self.z1),
            z2: g.g2.apply(&self.z2),
        }
    }

    /// Squared Euclidean distance in R⁶, summed per factor so that it is
    /// bitwise symmetric under swapping both arguments' factors.
    pub fn distance_squared(&self, other: &Self) -> T {
        (self.z1 - other.z1).norm_squared() + (self.z2 - other.z2).norm_squared()
    }
}

/// Features of one degree over all points of a field.
///
/// `data` has `points * channels` rows (point-major) and `dim` columns, so
/// the `c × dim` slab of point `u` is `F^{(p,q)}(z_u)`. A row is the
/// Kronecker-ordered vector `vec(A)` of a `(2q+1) × (2p+1)` matrix `A` in
/// column-major order; the action of `(r1, r2)` is then `A -> D_q(r2) A D_p(r1)ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBlock<T: Real> {
    pub degree: BiDegree,
    pub channels: usize,
    pub data: DMatrix<T>,
}

impl<T: Real> FeatureBlock<T> {
    pub fn zeros(degree: BiDegree, channels: usize, points: usize) -> Self {
        FeatureBlock {
            degree,
            channels,
            data: DMatrix::zeros(points * channels, degree.dim()),
        }
    }

    pub fn new(degree: BiDegree, channels: usize, data: DMatrix<T>) -> Result<Self> {
        degree.validate()?;
        if channels == 0 || data.ncols() != degree.dim() || !data.nrows().is_multiple_of(channels) {
            return Err(BitrError::FeatureChannelMismatch(format!(
                "block {degree} with {channels} channels cannot hold a {}x{} array",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(FeatureBlock {
            degree,
            channels,
            data,
        })
    }

    pub fn points(&self) -> usize {
        self.data.nrows() / self.channels.max(1)
    }

    pub fn point(&self, u: usize) -> DMatrixView<'_, T> {
        self.data.rows(u * self.channels, self.channels)
    }

    pub fn point_mut(&mut self, u: usize) -> DMatrixViewMut<'_, T> {
        self.data.rows_mut(u * self.channels, self.channels)
    }

    /// Mean over points, one row per channel.
    pub fn mean_pool(&self) -> DMatrix<T> {
        let n = self.points();
        let mut acc = DMatrix::zeros(self.channels, self.degree.dim());
        for u in 0..n {
            acc += self.point(u);
        }
        acc / from_usize::<T>(n.max(1))
    }
}

/// Reshapes a feature vector of degree `(p, q)` into its `(2q+1) × (2p+1)`
/// matrix (column-major).
pub fn unvec<T: Real>(degree: BiDegree, v: &[T]) -> DMatrix<T> {
    DMatrix::from_column_slice(irrep_dim(degree.q), irrep_dim(degree.p), v)
}

/// Points with degree-indexed feature blocks attached.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField<T: Real> {
    pub points: Vec<Point6<T>>,
    pub blocks: BTreeMap<BiDegree, FeatureBlock<T>>,
}

impl<T: Real> TensorField<T> {
    pub fn new(points: Vec<Point6<T>>) -> Self {
        TensorField {
            points,
            blocks: BTreeMap::new(),
        }
    }

    /// Field with a single constant degree-(0,0) channel.
    pub fn constant(points: Vec<Point6<T>>) -> Self {
        let n = points.len();
        let mut f = TensorField::new(points);
        let block = FeatureBlock {
            degree: BiDegree::SCALAR,
            channels: 1,
            data: DMatrix::from_element(n, 1, T::one()),
        };
        f.blocks.insert(BiDegree::SCALAR, block);
        f
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn insert(&mut self, block: FeatureBlock<T>) -> Result<()> {
        if block.points() != self.len() {
            return Err(BitrError::LengthMismatch {
                left: block.points(),
                right: self.len(),
            });
        }
        self.blocks.insert(block.degree, block);
        Ok(())
    }

    pub fn with_block(mut self, block: FeatureBlock<T>) -> Result<Self> {
        self.insert(block)?;
        Ok(self)
    }

    pub fn block(&self, degree: BiDegree) -> Result<&FeatureBlock<T>> {
        self.blocks
            .get(&degree)
            .ok_or(BitrError::MissingDegree(degree))
    }

    pub fn degrees(&self) -> impl Iterator<Item = BiDegree> + '_ {
        self.blocks.keys().copied()
    }

    fn max_factor_degree(&self) -> usize {
        self.degrees().map(|d| d.p.max(d.q)).max().unwrap_or(0)
    }

    /// Largest absolute difference over points and features; `None` when
    /// the supports or degree sets differ in shape.
    pub fn max_abs_diff(&self, other: &Self) -> Option<T> {
        if self.len() != other.len() || !self.degrees().eq(other.degrees()) {
            return None;
        }
        let mut worst = T::zero();
        for (a, b) in self.points.iter().zip(&other.points) {
            worst = worst.max((a.z1 - b.z1).amax()).max((a.z2 - b.z2).amax());
        }
        for (a, b) in self.blocks.values().zip(other.blocks.values()) {
            if a.data.shape() != b.data.shape() {
                return None;
            }
            worst = worst.max((&a.data - &b.data).amax());
        }
        Some(worst)
    }
}

/// Action of `(g1, g2)`: points move factor-wise and every degree-(p,q)
/// feature is multiplied by `D_p(r1) ⊗ D_q(r2)`.
pub fn act_bi_rigid<T: Real>(g: &BiRigid<T>, f: &TensorField<T>) -> TensorField<T> {
    let pmax = f.max_factor_degree();
    let (d1, d2) = (wigner_stack(pmax, &g.g1.r), wigner_stack(pmax, &g.g2.r));
    let points = f.points.iter().map(|z| z.acted(g)).collect();
    let blocks = f
        .blocks
        .iter()
        .map(|(&deg, b)| {
            let rho_t = d1[deg.p].kronecker(&d2[deg.q]).transpose();
            let block = FeatureBlock {
                degree: deg,
                channels: b.channels,
                data: &b.data * rho_t,
            };
            (deg, block)
        })
        .collect();
    TensorField { points, blocks }
}

/// Column permutation taking a degree-(p,q) vector to the transposed
/// degree-(q,p) vector.
pub(crate) fn transpose_permutation(degree: BiDegree) -> Vec<usize> {
    let (dp, dq) = (irrep_dim(degree.p), irrep_dim(degree.q));
    let mut perm = vec![0; dp * dq];
    for a in 0..dp {
        for b in 0..dq {
            perm[b * dp + a] = a * dq + b;
        }
    }
    perm
}

/// Swap action: points become `z2 ⊕ z1` and the degree-(q,p) block, with
/// each feature matrix transposed, becomes the degree-(p,q) block.
pub fn act_swap<T: Real>(f: &TensorField<T>) -> TensorField<T> {
    let points = f.points.iter().map(Point6::swapped).collect();
    let blocks = f
        .blocks
        .iter()
        .map(|(&deg, b)| {
            let perm = transpose_permutation(deg);
            let data = DMatrix::from_fn(b.data.nrows(), b.data.ncols(), |r, c| b.data[(r, perm[c])]);
            let out = deg.swapped();
            let block = FeatureBlock {
                degree: out,
                channels: b.channels,
                data,
            };
            (out, block)
        })
        .collect();
    TensorField { points, blocks }
}

/// Degree-`p` scale action: points scale by `c`, features by `c^p`.
pub fn act_scale<T: Real>(c: T, p: i32, f: &TensorField<T>) -> Result<TensorField<T>> {
    if c <= T::zero() {
        return Err(BitrError::NonPositiveScale(to_f64(c)));
    }
    let factor = c.powi(p);
    Ok(TensorField {
        points: f.points.iter().map(|z| z.scaled(c)).collect(),
        blocks: f
            .blocks
            .iter()
            .map(|(&deg, b)| {
                let block = FeatureBlock {
                    degree: deg,
                    channels: b.channels,
                    data: &b.data * factor,
                };
                (deg, block)
            })
            .collect(),
    })
}

/// Mean of a block's single channel as a flat vector.
pub(crate) fn pooled_vector<T: Real>(f: &TensorField<T>, degree: BiDegree) -> Result<DVector<T>> {
    let block = f.block(degree)?;
    if block.channels != 1 {
        return Err(BitrError::FeatureChannelMismatch(format!(
            "expected one channel of degree {degree}, found {}",
            block.channels
        )));
    }
    Ok(block.mean_pool().row(0).transpose())
}
