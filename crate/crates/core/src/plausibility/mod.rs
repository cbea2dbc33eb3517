//! Object distance fields, hand–object penetration and the tracking reward.

mod mesh;
mod penetration;
mod reward;
mod tsdf;

pub use mesh::{closest_point_on_triangle, load_obj, parse_obj, tri_area, TriMesh};
pub use penetration::{
    min_depth, penetration_energy, resolve_penetration, HandSurface, Resolution, ResolveOptions, Subset,
};
pub use reward::{
    contact_kernel, pose_error, reward_step, tracking_kernel, Contact, RewardSpec, RewardState,
};
pub use tsdf::{build_tsdf, query_sdf, TsdfGrid, TsdfParams, DEFAULT_VOXEL};
