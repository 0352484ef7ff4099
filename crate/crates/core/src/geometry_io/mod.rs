//! Point cloud files, synthetic data generation and preprocessing.

mod formats;
mod normals;
mod random;
mod sample;

pub use formats::{load_cloud, load_mesh, save_cloud, CloudFormat};
pub use normals::{estimate_normals, nearest_indices};
pub use random::{
    random_rigid, random_rigid_with, random_rotation, random_unit_vector, seeded_rng,
    RotationScope, SeededRng,
};
pub use sample::{
    add_outliers, builtin_mesh, crop_by_plane, crop_by_random_plane, sample_mesh, split_two,
    voxel_grid_sample, PlaneCropSpec, TriangleMesh,
};
