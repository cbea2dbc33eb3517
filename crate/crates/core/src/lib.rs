//! Convert reconstructed hand–object interaction tracks into robot trajectories.
//!
//! The crate is organised by pipeline stage:
//!
//! - [`geom`]: rotations, poses, axis-angle maps, boxes.
//! - [`canonical`]: camera→world lifting and the canonical action frame.
//! - [`retarget`]: hand keypoints → parallel-jaw gripper poses and commands.
//! - [`plausibility`]: truncated signed distance fields, penetration
//!   resolution and the tracking/contact reward.
//! - [`kinematics`]: serial chains, forward/inverse kinematics, replay.
//! - [`augment`]: segmentation, object-frame transforms, open-segment
//!   remapping, mirroring, object retrieval.
//! - [`metrics`]: surface and trajectory quality metrics.
//! - [`io`] and [`pipeline`]: file formats and the batch driver.

pub mod augment;
pub mod canonical;
pub mod error;
pub mod geom;
pub mod io;
pub mod kinematics;
pub mod metrics;
pub mod pipeline;
pub mod plausibility;
pub mod pointcloud;
pub mod retarget;
pub mod synth;
pub mod trajectory;

pub use error::{Error, Result};
