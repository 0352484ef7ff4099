//! Real irreducible representations of SO(3) and SO(3)×SO(3).
//!
//! Everything here lives in one real basis shared by the Wigner-D
//! matrices, the spherical harmonics and the Clebsch-Gordan tables:
//!
//! * degree 0 is the constant function `Y_0 = 1`;
//! * degree 1 is ordered Cartesian `(x, y, z)`, so `D_1(r) = r` and
//!   `Y_1(u) = u` exactly;
//! * degrees `>= 2` are ordered `m = -J..J` (sine terms for `m < 0`,
//!   cosine terms for `m > 0`).
//!
//! Harmonics have unit norm at every point of the sphere and carry no
//! Condon-Shortley phase. Vectors of a degree-`(p, q)` feature are
//! Kronecker-ordered: component `(a, b)` sits at `a * (2q + 1) + b` and
//! transforms with `D_p(r1) ⊗ D_q(r2)`.

mod clebsch;
mod harmonics;
mod wigner;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use clebsch::{bi_cg_block, cg_block, BiCgBlock, CgBlock};
pub use harmonics::{real_harmonics, real_harmonics_unchecked, HarmonicVector, Y0};
pub use wigner::{check_rotation, wigner_d, wigner_d_unchecked, wigner_stack, WignerD};

use crate::error::{BitrError, Result};

/// Largest irrep degree any table supports.
pub const MAX_DEGREE: usize = 4;

/// Dimension `2p + 1` of the degree-`p` irrep.
#[inline]
pub const fn irrep_dim(p: usize) -> usize {
    2 * p + 1
}

pub(crate) fn check_degree(p: usize) -> Result<()> {
    if p > MAX_DEGREE {
        return Err(BitrError::DegreeOutOfRange {
            degree: p,
            max: MAX_DEGREE,
        });
    }
    Ok(())
}

/// Degree `(p, q)` of an irrep of SO(3)×SO(3).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BiDegree {
    pub p: usize,
    pub q: usize,
}

impl BiDegree {
    pub const SCALAR: BiDegree = BiDegree { p: 0, q: 0 };

    pub const fn new(p: usize, q: usize) -> Self {
        BiDegree { p, q }
    }

    /// Dimension `(2p + 1)(2q + 1)`.
    pub const fn dim(self) -> usize {
        irrep_dim(self.p) * irrep_dim(self.q)
    }

    /// The degree with both factors exchanged.
    pub const fn swapped(self) -> Self {
        BiDegree {
            p: self.q,
            q: self.p,
        }
    }

    pub fn validate(self) -> Result<Self> {
        check_degree(self.p)?;
        check_degree(self.q)?;
        Ok(self)
    }
}

impl fmt::Display for BiDegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.p, self.q)
    }
}

/// Range of `J` permitted by the triangle inequality for `o ⊗ i`.
pub fn coupled_degrees(o: usize, i: usize) -> std::ops::RangeInclusive<usize> {
    o.abs_diff(i)..=(o + i)
}
