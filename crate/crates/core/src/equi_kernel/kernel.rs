use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Vector3};
use rand::Rng;
use serde::Serialize;

use super::radial::{Homogeneity, RadialNet};
use crate::error::{BitrError, Result};
use crate::geometry_io::random_rotation;
use crate::params::{ParamMap, ParamSource};
use crate::rep_theory::{
    bi_cg_block, coupled_degrees, irrep_dim, real_harmonics_unchecked, wigner_stack, BiDegree, Y0,
};
use crate::scalar::{lit, to_f64, Real};
use crate::tensor_field::Point6;

/// Norms below this are treated as zero when choosing a direction.
pub const ZERO_NORM: f64 = 1e-12;

/// How a kernel's radial functions relate to its swap partner `(õ, ĩ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwapTie {
    /// Independent weights.
    Untied,
    /// Owns the network that the partner spec mirrors.
    Owner,
    /// Reuses the partner's network with arguments and `(J1, J2)` exchanged.
    Mirror,
    /// Its own partner; the radial functions are symmetrized.
    SelfPartner,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Route {
    head: usize,
    swap: bool,
    average: bool,
}

/// Equivariant kernel from degree `input` to degree `output`.
#[derive(Debug, Clone)]
pub struct KernelSpec<T: Real> {
    pub input: BiDegree,
    pub output: BiDegree,
    pub c_in: usize,
    pub c_out: usize,
    /// `(J1, J2)` pairs, `J1` outer.
    pub slots: Vec<(usize, usize)>,
    /// Second-order change of basis per slot, `dim_i * dim_o` rows.
    pub bases: Vec<DMatrix<T>>,
    pub net: Arc<RadialNet<T>>,
    pub tie: SwapTie,
    routes: Vec<Route>,
    net_slots: usize,
}

fn slots_for(output: BiDegree, input: BiDegree) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for j1 in coupled_degrees(output.p, input.p) {
        for j2 in coupled_degrees(output.q, input.q) {
            out.push((j1, j2));
        }
    }
    out
}

fn bases_for<T: Real>(
    output: BiDegree,
    input: BiDegree,
    slots: &[(usize, usize)],
) -> Result<Vec<DMatrix<T>>> {
    slots
        .iter()
        .map(|&(j1, j2)| {
            let b = bi_cg_block(output, input, j1, j2)?;
            Ok(b.matrix.map(lit::<T>))
        })
        .collect()
}

impl<T: Real> KernelSpec<T> {
    /// Builds a spec that owns its radial network. With `tie` set to
    /// [`SwapTie::SelfPartner`] both degrees must be swap-symmetric and only
    /// slots with `J1 <= J2` get their own outputs.
    pub fn build(
        input: BiDegree,
        output: BiDegree,
        c_in: usize,
        c_out: usize,
        homogeneity: Homogeneity,
        tie: SwapTie,
        name: &str,
        source: &mut dyn ParamSource<T>,
    ) -> Result<Self> {
        input.validate()?;
        output.validate()?;
        let slots = slots_for(output, input);
        let bases = bases_for(output, input, &slots)?;
        let (routes, net_slots) = match tie {
            SwapTie::Untied | SwapTie::Owner => {
                let routes = (0..slots.len())
                    .map(|head| Route {
                        head,
                        swap: false,
                        average: false,
                    })
                    .collect();
                (routes, slots.len())
            }
            SwapTie::SelfPartner => {
                if input != input.swapped() || output != output.swapped() {
                    return Err(BitrError::DegreeMismatch(format!(
                        "{input} -> {output} is not its own swap partner"
                    )));
                }
                let owned: Vec<(usize, usize)> =
                    slots.iter().copied().filter(|(a, b)| a <= b).collect();
                let find = |key: (usize, usize)| owned.iter().position(|&s| s == key).unwrap();
                let routes = slots
                    .iter()
                    .map(|&(j1, j2)| Route {
                        head: find((j1.min(j2), j1.max(j2))),
                        swap: j1 > j2,
                        average: j1 == j2,
                    })
                    .collect();
                (routes, owned.len())
            }
            SwapTie::Mirror => {
                return Err(BitrError::InvalidArgument(
                    "mirrored kernels are built with KernelSpec::mirror".into(),
                ))
            }
        };
        let net = RadialNet::build(homogeneity, c_out * c_in * net_slots, name, source)?;
        Ok(KernelSpec {
            input,
            output,
            c_in,
            c_out,
            slots,
            bases,
            net: Arc::new(net),
            tie,
            routes,
            net_slots,
        })
    }

    /// The swap partner `(ĩ -> õ)` of an owning spec, sharing its network.
    pub fn mirror(owner: &KernelSpec<T>) -> Result<Self> {
        if owner.tie != SwapTie::Owner {
            return Err(BitrError::InvalidArgument(
                "only an owning spec can be mirrored".into(),
            ));
        }
        let input = owner.input.swapped();
        let output = owner.output.swapped();
        let slots = slots_for(output, input);
        let bases = bases_for(output, input, &slots)?;
        let routes = slots
            .iter()
            .map(|&(j1, j2)| Route {
                head: owner.slots.iter().position(|&s| s == (j2, j1)).unwrap(),
                swap: true,
                average: false,
            })
            .collect();
        Ok(KernelSpec {
            input,
            output,
            c_in: owner.c_in,
            c_out: owner.c_out,
            slots,
            bases,
            net: Arc::clone(&owner.net),
            tie: SwapTie::Mirror,
            routes,
            net_slots: owner.net_slots,
        })
    }

    pub fn homogeneity(&self) -> Homogeneity {
        self.net.homogeneity
    }

    /// Largest harmonic degree used by any slot.
    pub fn max_j(&self) -> usize {
        self.slots.iter().map(|&(a, b)| a.max(b)).max().unwrap_or(0)
    }

    /// Writes the network weights unless they belong to the partner.
    pub fn export(&self, name: &str, out: &mut ParamMap) {
        if self.tie != SwapTie::Mirror {
            self.net.export(name, out);
        }
    }

    /// Radial values indexed `(co * c_in + ci) * slots + slot`.
    pub fn radial(&self, n1: T, n2: T) -> Vec<T> {
        let ab = self.net.eval(n1, n2);
        let ba = if self.routes.iter().any(|r| r.swap || r.average) {
            self.net.eval(n2, n1)
        } else {
            DVector::zeros(0)
        };
        let half = lit::<T>(0.5);
        let ns = self.slots.len();
        let mut out = Vec::with_capacity(self.c_out * self.c_in * ns);
        for pair in 0..self.c_out * self.c_in {
            let base = pair * self.net_slots;
            for route in &self.routes {
                let k = base + route.head;
                out.push(if route.average {
                    half * (ab[k] + ba[k])
                } else if route.swap {
                    ba[k]
                } else {
                    ab[k]
                });
            }
        }
        out
    }

    /// Angular matrices `unvec(Q (Y_J1 ⊗ Y_J2))`, `dim_o × dim_i`, per slot.
    pub fn angular(&self, geom: &EdgeGeometry<T>) -> Vec<DMatrix<T>> {
        let (dim_o, dim_i) = (self.output.dim(), self.input.dim());
        self.slots
            .iter()
            .zip(&self.bases)
            .map(|(&(j1, j2), q)| {
                let y = DVector::from_fn(irrep_dim(j1) * irrep_dim(j2), |k, _| {
                    geom.y1[j1][k / irrep_dim(j2)] * geom.y2[j2][k % irrep_dim(j2)]
                });
                let v = q * y;
                DMatrix::from_column_slice(dim_o, dim_i, v.as_slice())
            })
            .collect()
    }
}

/// Norms and harmonics of a relative position, shared by all kernels of a layer.
#[derive(Debug, Clone)]
pub struct EdgeGeometry<T: Real> {
    pub n1: T,
    pub n2: T,
    pub y1: Vec<Vec<T>>,
    pub y2: Vec<Vec<T>>,
}

fn harmonic_stack<T: Real>(v: &Vector3<T>, jmax: usize) -> (T, Vec<Vec<T>>) {
    let n = v.norm();
    let zero = n < lit(ZERO_NORM);
    let ys = (0..=jmax)
        .map(|j| {
            let mut out = vec![T::zero(); irrep_dim(j)];
            if j == 0 {
                out[0] = lit(Y0);
            } else if !zero {
                real_harmonics_unchecked(j, &(v / n), &mut out);
            }
            out
        })
        .collect();
    (n, ys)
}

impl<T: Real> EdgeGeometry<T> {
    pub fn new(z: &Point6<T>, jmax: usize) -> Self {
        let (n1, y1) = harmonic_stack(&z.z1, jmax);
        let (n2, y2) = harmonic_stack(&z.z2, jmax);
        EdgeGeometry { n1, n2, y1, y2 }
    }
}

/// Kernel value at one relative position: a `dim_o × dim_i` matrix per
/// channel pair.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelValue<T: Real> {
    pub c_out: usize,
    pub c_in: usize,
    pub blocks: Vec<DMatrix<T>>,
}

impl<T: Real> KernelValue<T> {
    pub fn get(&self, co: usize, ci: usize) -> &DMatrix<T> {
        &self.blocks[co * self.c_in + ci]
    }
}

/// `W(z) = Σ φ_{J1,J2}(‖z¹‖, ‖z²‖) unvec(Q_{J1,J2} (Y_J1(ẑ¹) ⊗ Y_J2(ẑ²)))`.
pub fn kernel_eval<T: Real>(spec: &KernelSpec<T>, z: &Point6<T>) -> KernelValue<T> {
    let geom = EdgeGeometry::new(z, spec.max_j());
    let angular = spec.angular(&geom);
    let radial = spec.radial(geom.n1, geom.n2);
    let ns = spec.slots.len();
    let blocks = (0..spec.c_out * spec.c_in)
        .map(|pair| {
            let mut w = DMatrix::zeros(spec.output.dim(), spec.input.dim());
            for (s, a) in angular.iter().enumerate() {
                w += a * radial[pair * ns + s];
            }
            w
        })
        .collect();
    KernelValue {
        c_out: spec.c_out,
        c_in: spec.c_in,
        blocks,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelCertificate {
    pub input: BiDegree,
    pub output: BiDegree,
    pub trials: usize,
    pub max_residual: f64,
    pub passed: bool,
}

/// Largest `‖ρ_o W(z) ρ_iᵀ − W((r1, r2) z)‖_F` over random positions and
/// rotation pairs, i.e. the kernel constraint in matrix form.
pub fn certify_kernel_constraint<T: Real, R: Rng>(
    spec: &KernelSpec<T>,
    trials: usize,
    tol: f64,
    rng: &mut R,
) -> KernelCertificate {
    let pmax = [spec.input.p, spec.input.q, spec.output.p, spec.output.q]
        .into_iter()
        .max()
        .unwrap();
    let mut worst = 0.0f64;
    for _ in 0..trials.max(1) {
        let mut coord = || lit::<T>(rng.random_range(-2.0..2.0));
        let z = Point6::new(
            Vector3::new(coord(), coord(), coord()),
            Vector3::new(coord(), coord(), coord()),
        );
        let r1 = random_rotation::<T, _>(rng);
        let r2 = random_rotation::<T, _>(rng);
        let d1 = wigner_stack(pmax, &r1);
        let d2 = wigner_stack(pmax, &r2);
        let rho_i = d1[spec.input.p].kronecker(&d2[spec.input.q]);
        let rho_o = d1[spec.output.p].kronecker(&d2[spec.output.q]);
        let here = kernel_eval(spec, &z);
        let moved = kernel_eval(spec, &Point6::new(r1 * z.z1, r2 * z.z2));
        for (w, w_moved) in here.blocks.iter().zip(&moved.blocks) {
            let residual = (&rho_o * w * rho_i.transpose() - w_moved).norm();
            worst = worst.max(to_f64(residual));
        }
    }
    KernelCertificate {
        input: spec.input,
        output: spec.output,
        trials: trials.max(1),
        max_residual: worst,
        passed: worst < tol,
    }
}
