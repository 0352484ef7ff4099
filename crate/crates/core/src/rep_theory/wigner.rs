use nalgebra::{DMatrix, Matrix3};

use super::{check_degree, irrep_dim};
use crate::error::{BitrError, Result};
use crate::scalar::{lit, to_f64, Real};

/// Real Wigner-D matrix `rho_p(r)` in the shared basis.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerD<T: Real> {
    pub degree: usize,
    pub matrix: DMatrix<T>,
}

/// Validates that `r` is orthogonal with determinant +1.
pub fn check_rotation<T: Real>(r: &Matrix3<T>) -> Result<()> {
    let tol = T::rotation_tolerance();
    let ortho = (r.transpose() * r - Matrix3::identity()).norm();
    let det = r.determinant();
    if !(ortho <= tol) || !((det - T::one()).abs() <= tol) {
        return Err(BitrError::NotARotation {
            orthogonality: to_f64(ortho),
            det: to_f64(det),
        });
    }
    Ok(())
}

/// Wigner-D matrix of degree `p` for the rotation `r`.
pub fn wigner_d<T: Real>(p: usize, r: &Matrix3<T>) -> Result<WignerD<T>> {
    check_degree(p)?;
    check_rotation(r)?;
    Ok(WignerD {
        degree: p,
        matrix: wigner_d_unchecked(p, r),
    })
}

/// Wigner-D matrix without input validation.
pub fn wigner_d_unchecked<T: Real>(p: usize, r: &Matrix3<T>) -> DMatrix<T> {
    wigner_stack(p, r).pop().expect("stack holds degree p")
}

/// Wigner-D matrices for every degree `0..=pmax`.
pub fn wigner_stack<T: Real>(pmax: usize, r: &Matrix3<T>) -> Vec<DMatrix<T>> {
    // The recursion runs in the m-ordered basis, where degree 1 is (y, z, x).
    let mut std: Vec<DMatrix<T>> = Vec::with_capacity(pmax + 1);
    std.push(DMatrix::from_element(1, 1, T::one()));
    if pmax >= 1 {
        const YZX: [usize; 3] = [1, 2, 0];
        std.push(DMatrix::from_fn(3, 3, |a, b| r[(YZX[a], YZX[b])]));
    }
    for l in 2..=pmax {
        let next = recurse(l, &std);
        std.push(next);
    }
    if pmax >= 1 {
        std[1] = DMatrix::from_fn(3, 3, |a, b| r[(a, b)]);
    }
    std
}

fn centered<T: Real>(m: &DMatrix<T>, i: isize, j: isize) -> T {
    let off = (m.nrows() as isize - 1) / 2;
    m[((i + off) as usize, (j + off) as usize)]
}

// Ivanic-Ruedenberg recursion for real harmonics rotation matrices.
fn p_term<T: Real>(i: isize, a: isize, b: isize, l: isize, d: &[DMatrix<T>]) -> T {
    let r1 = &d[1];
    let prev = &d[(l - 1) as usize];
    if b == l {
        centered(r1, i, 1) * centered(prev, a, l - 1) - centered(r1, i, -1) * centered(prev, a, -l + 1)
    } else if b == -l {
        centered(r1, i, 1) * centered(prev, a, -l + 1) + centered(r1, i, -1) * centered(prev, a, l - 1)
    } else {
        centered(r1, i, 0) * centered(prev, a, b)
    }
}

fn u_term<T: Real>(m: isize, n: isize, l: isize, d: &[DMatrix<T>]) -> T {
    p_term(0, m, n, l, d)
}

fn v_term<T: Real>(m: isize, n: isize, l: isize, d: &[DMatrix<T>]) -> T {
    let sqrt2 = lit::<T>(std::f64::consts::SQRT_2);
    if m == 0 {
        p_term(1, 1, n, l, d) + p_term(-1, -1, n, l, d)
    } else if m > 0 {
        if m == 1 {
            p_term(1, 0, n, l, d) * sqrt2
        } else {
            p_term(1, m - 1, n, l, d) - p_term(-1, -m + 1, n, l, d)
        }
    } else if m == -1 {
        p_term(-1, 0, n, l, d) * sqrt2
    } else {
        p_term(1, m + 1, n, l, d) + p_term(-1, -m - 1, n, l, d)
    }
}

fn w_term<T: Real>(m: isize, n: isize, l: isize, d: &[DMatrix<T>]) -> T {
    if m > 0 {
        p_term(1, m + 1, n, l, d) + p_term(-1, -m - 1, n, l, d)
    } else {
        p_term(1, m - 1, n, l, d) - p_term(-1, -m + 1, n, l, d)
    }
}

fn recurse<T: Real>(l: usize, d: &[DMatrix<T>]) -> DMatrix<T> {
    let li = l as isize;
    let dim = irrep_dim(l);
    let mut out = DMatrix::zeros(dim, dim);
    for m in -li..=li {
        for n in -li..=li {
            let delta = if m == 0 { 1.0 } else { 0.0 };
            let am = m.abs() as f64;
            let lf = l as f64;
            let denom = if n.abs() == li {
                2.0 * lf * (2.0 * lf - 1.0)
            } else {
                ((li + n) * (li - n)) as f64
            };
            let u = (((li + m) * (li - m)) as f64 / denom).sqrt();
            let v = 0.5 * ((1.0 + delta) * (lf + am - 1.0) * (lf + am) / denom).sqrt() * (1.0 - 2.0 * delta);
            let w = -0.5 * ((lf - am - 1.0) * (lf - am) / denom).max(0.0).sqrt() * (1.0 - delta);
            let mut val = T::zero();
            if u != 0.0 {
                val += lit::<T>(u) * u_term(m, n, li, d);
            }
            if v != 0.0 {
                val += lit::<T>(v) * v_term(m, n, li, d);
            }
            if w != 0.0 {
                val += lit::<T>(w) * w_term(m, n, li, d);
            }
            out[((m + li) as usize, (n + li) as usize)] = val;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use nalgebra::{DVector, Rotation3, Vector3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::rep_theory::{real_harmonics, MAX_DEGREE};

    fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
        let axis = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let angle = rng.random_range(-3.1..3.1);
        Rotation3::from_scaled_axis(axis.normalize() * angle).into_inner()
    }

    fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
        loop {
            let v = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            if v.norm() > 0.1 {
                return v.normalize();
            }
        }
    }

    #[test]
    fn degree_zero_and_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = random_rotation(&mut rng);
        assert_eq!(wigner_d(0, &r).unwrap().matrix, DMatrix::from_element(1, 1, 1.0));
        let d1 = wigner_d(1, &r).unwrap().matrix;
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(d1[(a, b)], r[(a, b)]);
            }
        }
        let id = wigner_d(1, &Matrix3::<f64>::identity()).unwrap().matrix;
        assert_eq!(id, DMatrix::identity(3, 3));
    }

    #[test]
    fn identity_maps_to_identity() {
        for p in 0..=MAX_DEGREE {
            let d = wigner_d(p, &Matrix3::<f64>::identity()).unwrap().matrix;
            assert!((d - DMatrix::identity(2 * p + 1, 2 * p + 1)).norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let mut bad = Matrix3::<f64>::identity();
        bad[(0, 0)] = -1.0;
        assert!(matches!(wigner_d(1, &bad), Err(BitrError::NotARotation { .. })));
        let scaled = Matrix3::<f64>::identity() * 1.01;
        assert!(wigner_d(2, &scaled).is_err());
        assert!(matches!(
            wigner_d(5, &Matrix3::<f64>::identity()),
            Err(BitrError::DegreeOutOfRange { .. })
        ));
    }

    #[test]
    fn orthogonal_with_unit_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let r = random_rotation(&mut rng);
            for p in 0..=MAX_DEGREE {
                let d = wigner_d(p, &r).unwrap().matrix;
                let n = 2 * p + 1;
                assert!((d.transpose() * &d - DMatrix::identity(n, n)).norm() < 1e-12);
                assert!((d.determinant() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn homomorphism_over_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let r1 = random_rotation(&mut rng);
            let r2 = random_rotation(&mut rng);
            let stack12 = wigner_stack(MAX_DEGREE, &(r1 * r2));
            let stack1 = wigner_stack(MAX_DEGREE, &r1);
            let stack2 = wigner_stack(MAX_DEGREE, &r2);
            for p in 0..=MAX_DEGREE {
                let err = (&stack12[p] - &stack1[p] * &stack2[p]).norm();
                assert!(err < 1e-10, "degree {p}: {err}");
            }
        }
    }

    /// Independent oracle: solve `D Y(U) = Y(rU)` by least squares over many
    /// sample directions.
    #[test]
    fn matches_least_squares_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let samples: Vec<_> = (0..60).map(|_| random_unit(&mut rng)).collect();
        for _ in 0..10 {
            let r = random_rotation(&mut rng);
            for p in 0..=MAX_DEGREE {
                let n = 2 * p + 1;
                let mut lhs = DMatrix::<f64>::zeros(n, n);
                let mut rhs = DMatrix::<f64>::zeros(n, n);
                for u in &samples {
                    let y: DVector<f64> = real_harmonics(p, u).unwrap().values;
                    let yr = real_harmonics(p, &(r * u)).unwrap().values;
                    lhs += &y * y.transpose();
                    rhs += &yr * y.transpose();
                }
                let oracle = rhs * lhs.try_inverse().unwrap();
                let d = wigner_d(p, &r).unwrap().matrix;
                assert!((oracle - d).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn harmonics_are_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let r = random_rotation(&mut rng);
            let u = random_unit(&mut rng);
            for j in 0..=MAX_DEGREE {
                let lhs = real_harmonics(j, &(r * u)).unwrap().values;
                let rhs = wigner_d(j, &r).unwrap().matrix * real_harmonics(j, &u).unwrap().values;
                assert!((lhs - rhs).norm() < 1e-10, "degree {j}");
            }
        }
    }

    #[test]
    fn single_precision_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let r1: Matrix3<f32> = random_rotation(&mut rng).cast();
            let r2: Matrix3<f32> = random_rotation(&mut rng).cast();
            for p in 0..=2 {
                let err = (wigner_d_unchecked(p, &(r1 * r2))
                    - wigner_d_unchecked(p, &r1) * wigner_d_unchecked(p, &r2))
                .norm();
                assert!(err < 1e-5);
            }
        }
    }
}
