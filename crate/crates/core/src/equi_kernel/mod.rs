//! SE(3)×SE(3)-equivariant convolution kernels.
//!
//! A kernel from degree `i` to degree `o` combines Clebsch-Gordan bases with
//! harmonics of each factor of the relative position, weighted by radial
//! networks of the two factor norms. Radial networks have no biases, which
//! makes each kernel positively homogeneous of the network's degree.

mod kernel;
mod radial;

pub use kernel::{
    certify_kernel_constraint, kernel_eval, EdgeGeometry, KernelCertificate, KernelSpec,
    KernelValue, SwapTie, ZERO_NORM,
};
pub use radial::{radial_eval, Homogeneity, RadialNet, RADIAL_HIDDEN};
