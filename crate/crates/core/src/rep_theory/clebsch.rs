use std::sync::OnceLock;

use nalgebra::{DMatrix, Matrix3, Rotation3, SymmetricEigen, Vector3};

use super::{check_degree, irrep_dim, wigner_stack, BiDegree, MAX_DEGREE};
use crate::error::{BitrError, Result};

/// Change of basis from `D_i ⊗ D_o` onto its degree-`J` component.
///
/// Rows are indexed `m_i * (2o + 1) + m_o`; the `2J + 1` columns are
/// orthonormal and satisfy `(D_i(r) ⊗ D_o(r)) Q = Q D_J(r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CgBlock {
    pub o: usize,
    pub i: usize,
    pub j: usize,
    pub matrix: DMatrix<f64>,
}

/// Second-order block: the Kronecker product of the `(o1, i1, J1)` and
/// `(o2, i2, J2)` blocks, with rows reordered to the `(i1, i2, o1, o2)`
/// layout of `vec(W)` and columns in `Y_J1 ⊗ Y_J2` order.
#[derive(Debug, Clone, PartialEq)]
pub struct BiCgBlock {
    pub o: BiDegree,
    pub i: BiDegree,
    pub j1: usize,
    pub j2: usize,
    pub matrix: DMatrix<f64>,
}

const SLOTS: usize = (MAX_DEGREE + 1) * (MAX_DEGREE + 1) * (MAX_DEGREE + 1);

static TABLE: [OnceLock<CgBlock>; SLOTS] = [const { OnceLock::new() }; SLOTS];

/// Clebsch-Gordan block for `o ⊗ i -> J`, computed on first use and cached.
pub fn cg_block(o: usize, i: usize, j: usize) -> Result<&'static CgBlock> {
    check_degree(o)?;
    check_degree(i)?;
    check_degree(j)?;
    if j < o.abs_diff(i) || j > o + i {
        return Err(BitrError::TriangleViolation { o, i, j });
    }
    let slot = (o * (MAX_DEGREE + 1) + i) * (MAX_DEGREE + 1) + j;
    Ok(TABLE[slot].get_or_init(|| CgBlock {
        o,
        i,
        j,
        matrix: solve_intertwiner(o, i, j),
    }))
}

/// Second-order Clebsch-Gordan block for bi-degrees.
pub fn bi_cg_block(o: BiDegree, i: BiDegree, j1: usize, j2: usize) -> Result<BiCgBlock> {
    let q1 = &cg_block(o.p, i.p, j1)?.matrix;
    let q2 = &cg_block(o.q, i.q, j2)?.matrix;
    let (do1, do2) = (irrep_dim(o.p), irrep_dim(o.q));
    let (di1, di2) = (irrep_dim(i.p), irrep_dim(i.q));
    let kron = q1.kronecker(q2);
    let mut matrix = DMatrix::zeros(kron.nrows(), kron.ncols());
    for mi1 in 0..di1 {
        for mo1 in 0..do1 {
            for mi2 in 0..di2 {
                for mo2 in 0..do2 {
                    let src = (mi1 * do1 + mo1) * (di2 * do2) + mi2 * do2 + mo2;
                    let dst = ((mi1 * di2 + mi2) * do1 + mo1) * do2 + mo2;
                    matrix.set_row(dst, &kron.row(src));
                }
            }
        }
    }
    Ok(BiCgBlock { o, i, j1, j2, matrix })
}

fn probe_rotations() -> [Matrix3<f64>; 2] {
    [
        Rotation3::from_scaled_axis(Vector3::new(0.3, -0.5, 0.8).normalize() * 1.1).into_inner(),
        Rotation3::from_scaled_axis(Vector3::new(-0.7, 0.2, 0.4).normalize() * 2.3).into_inner(),
    ]
}

/// Null space of `Q -> (D_i ⊗ D_o) Q - Q D_J` over two generic rotations.
/// Two generic rotations generate a dense subgroup, so the solution space is
/// one-dimensional.
fn solve_intertwiner(o: usize, i: usize, j: usize) -> DMatrix<f64> {
    let n = irrep_dim(o) * irrep_dim(i);
    let d = irrep_dim(j);
    let unknowns = n * d;
    let top = o.max(i).max(j);
    let mut normal = DMatrix::<f64>::zeros(unknowns, unknowns);
    for r in probe_rotations() {
        let stack = wigner_stack(top, &r);
        let a = stack[i].kronecker(&stack[o]);
        let b = &stack[j];
        // Row (row, col) of the linear map, with unknown Q[k, c] at c * n + k.
        let mut m = DMatrix::<f64>::zeros(unknowns, unknowns);
        for col in 0..d {
            for row in 0..n {
                let eq = col * n + row;
                for k in 0..n {
                    m[(eq, col * n + k)] += a[(row, k)];
                }
                for k in 0..d {
                    m[(eq, k * n + row)] -= b[(k, col)];
                }
            }
        }
        normal += m.transpose() * &m;
    }
    let eig = SymmetricEigen::new(normal);
    let mut order: Vec<usize> = (0..unknowns).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    debug_assert!(unknowns == 1 || eig.eigenvalues[order[1]] > 1e-6);
    let v = eig.eigenvectors.column(order[0]);

    let mut q = DMatrix::from_fn(n, d, |row, col| v[col * n + row]);
    let gram = q.transpose() * &q;
    q /= (gram.trace() / d as f64).sqrt();

    // Sign: the first entry of (near-)maximal magnitude is positive.
    let max = q.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let pivot = q
        .iter()
        .copied()
        .find(|x| x.abs() > max * (1.0 - 1e-9))
        .unwrap_or(1.0);
    if pivot < 0.0 {
        q = -q;
    }
    q
}
