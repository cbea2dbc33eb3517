//! Contact-state segmentation and trajectory augmentations: object-frame
//! transforms, open-segment remapping, mirroring and substitute retrieval.

mod mirror;
mod retrieval;
mod segment;
mod transform;

pub use mirror::{
    mirror_pose, mirror_trajectory, screw_component, MirrorOutcome, MirrorSpec, DEFAULT_TAU_SCREW,
};
pub use retrieval::{
    bind_substitute, normalize_to_unit_box, rank_substitutes, retrieval_score, surface_moments, Binding,
    ObjectAsset, ScoreBreakdown, SimilarityWeights,
};
pub use segment::{segment_trajectory, Segment, SegmentState};
pub use transform::{
    augment_trajectory, progress, remap_open, sample_augment_spec, transform_hold, AugmentSampling,
    AugmentSpec, ProgressMode, DEFAULT_ROTATION_CAP,
};
pub use crate::pointcloud::chamfer_distance;
