use nalgebra::{DVector, Vector3};

use super::{check_degree, irrep_dim};
use crate::error::{BitrError, Result};
use crate::scalar::{lit, Real};

/// Value of the constant degree-0 harmonic.
///
/// Harmonics are scaled to unit norm, `‖Y_J(u)‖ = 1`, which is
/// `sqrt(4π / (2J + 1))` times the orthonormal convention. This keeps kernel
/// magnitudes independent of `J` and makes `Y_1(u) = u`.
pub const Y0: f64 = 1.0;

/// Real spherical harmonics of one degree evaluated at a unit vector.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicVector<T: Real> {
    pub degree: usize,
    pub values: DVector<T>,
}

/// Evaluates `Y_J(u)` for a unit vector `u`.
pub fn real_harmonics<T: Real>(j: usize, u: &Vector3<T>) -> Result<HarmonicVector<T>> {
    check_degree(j)?;
    let norm = u.norm();
    if norm == T::zero() {
        return Err(BitrError::ZeroVector);
    }
    if (norm - T::one()).abs() > lit::<T>(1e-9).max(T::default_epsilon() * lit(64.0)) {
        return Err(BitrError::InvalidArgument(format!(
            "harmonics need a unit vector, got norm {norm}"
        )));
    }
    let mut values = DVector::zeros(irrep_dim(j));
    real_harmonics_unchecked(j, u, values.as_mut_slice());
    Ok(HarmonicVector { degree: j, values })
}

/// Writes `Y_J(u)` into `out` without validating `u` or `J`.
pub fn real_harmonics_unchecked<T: Real>(j: usize, u: &Vector3<T>, out: &mut [T]) {
    debug_assert_eq!(out.len(), irrep_dim(j));
    let (x, y, z) = (u.x, u.y, u.z);
    if j == 1 {
        out[0] = x;
        out[1] = y;
        out[2] = z;
        return;
    }

    // cos/sin parts of (x + iy)^m
    let mut cm = vec![T::one(); j + 1];
    let mut sm = vec![T::zero(); j + 1];
    for m in 1..=j {
        cm[m] = x * cm[m - 1] - y * sm[m - 1];
        sm[m] = x * sm[m - 1] + y * cm[m - 1];
    }

    let sqrt2 = lit::<T>(std::f64::consts::SQRT_2);
    for m in 0..=j {
        let q = legendre_reduced::<T>(j, m, z);
        let mut ratio = 1.0f64;
        for k in (j - m + 1)..=(j + m) {
            ratio /= k as f64;
        }
        let n = lit::<T>(ratio.sqrt());
        if m == 0 {
            out[j] = n * q;
        } else {
            out[j + m] = sqrt2 * n * q * cm[m];
            out[j - m] = sqrt2 * n * q * sm[m];
        }
    }
}

/// Associated Legendre function divided by `sin^m(theta)`, a polynomial in
/// `z = cos(theta)`, without the Condon-Shortley phase.
fn legendre_reduced<T: Real>(l: usize, m: usize, z: T) -> T {
    let mut pmm = T::one();
    for k in 1..=m {
        pmm *= lit::<T>((2 * k - 1) as f64);
    }
    if l == m {
        return pmm;
    }
    let mut pm1 = z * lit::<T>((2 * m + 1) as f64) * pmm;
    if l == m + 1 {
        return pm1;
    }
    let mut pm2 = pmm;
    for ll in (m + 2)..=l {
        let next = (lit::<T>((2 * ll - 1) as f64) * z * pm1 - lit::<T>((ll + m - 1) as f64) * pm2)
            / lit::<T>((ll - m) as f64);
        pm2 = pm1;
        pm1 = next;
    }
    pm1
}
