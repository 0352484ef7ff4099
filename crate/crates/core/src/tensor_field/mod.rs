//! Tensor fields over merged 6-D point clouds and the group actions on them.

mod field;
mod rigid;

pub use field::{
    act_bi_rigid, act_scale, act_swap, unvec, FeatureBlock, Point6, PointCloud, TensorField,
};
pub(crate) use field::pooled_vector;
pub use rigid::{
    compose, homogeneous_matrix, invert, relative_error, BiRigid, RigidTransform, TransformDoc,
};
