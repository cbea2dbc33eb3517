//! Sagittal (x = 0) mirroring of hand and object streams.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{so3_log, Mat3, Pose, Rot3, Vec3};
use crate::trajectory::GripperTrajectory;

use super::segment::{segment_trajectory, Segment, SegmentState};

pub const DEFAULT_TAU_SCREW: f64 = 0.35;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MirrorSpec {
    pub tau_screw: f64,
}

impl Default for MirrorSpec {
    fn default() -> Self {
        MirrorSpec {
            tau_screw: DEFAULT_TAU_SCREW,
        }
    }
}

fn reflection() -> Mat3 {
    Mat3::from_diagonal(&Vec3::new(-1.0, 1.0, 1.0))
}

/// p' = S·p, R' = S·R·S·R_y(π).
pub fn mirror_pose(p: &Pose) -> Pose {
    let s = reflection();
    let r = s * p.rot.matrix() * s * Rot3::rot_y(std::f64::consts::PI).matrix();
    Pose::new(Rot3::from_matrix_unchecked(r), s * p.trans)
}

#[derive(Clone, Debug, PartialEq)]
pub enum MirrorOutcome {
    Mirrored {
        hand: GripperTrajectory,
        object: Vec<Pose>,
    },
    Rejected {
        segment: Segment,
        screw: f64,
    },
}

/// Signed rotation accumulated about `axis` over consecutive frames of `seg`.
pub fn screw_component(object: &[Pose], seg: &Segment, axis: &Vec3) -> Result<f64> {
    if seg.len() < 2 {
        return Err(Error::invalid("screw component needs at least 2 frames"));
    }
    if seg.end >= object.len() {
        return Err(Error::invalid(format!("segment ends at {} past {} poses", seg.end, object.len())));
    }
    Ok((seg.start..seg.end)
        .map(|t| so3_log(&(object[t].rot.inverse() * object[t + 1].rot)).dot(axis))
        .sum())
}

/// Mirrors both streams and flips the gripper chirality, or rejects the
/// clip when any hold segment twists the object about `task_axis` by more
/// than `tau_screw`.
pub fn mirror_trajectory(
    hand: &GripperTrajectory,
    object: &[Pose],
    spec: &MirrorSpec,
    task_axis: &Vec3,
) -> Result<MirrorOutcome> {
    if hand.len() != object.len() {
        return Err(Error::LengthMismatch {
            a: "hand".into(),
            len_a: hand.len(),
            b: "object".into(),
            len_b: object.len(),
        });
    }
    if !(spec.tau_screw > 0.0) {
        return Err(Error::invalid("tau_screw must be positive"));
    }
    let axis = task_axis.try_normalize(1e-12).ok_or_else(|| Error::invalid("zero task axis"))?;
    for seg in segment_trajectory(hand) {
        if seg.state == SegmentState::Hold && seg.len() >= 2 {
            let screw = screw_component(object, &seg, &axis)?;
            if screw.abs() > spec.tau_screw {
                return Ok(MirrorOutcome::Rejected { segment: seg, screw });
            }
        }
    }
    let mut mirrored = hand.clone();
    mirrored.chirality = hand.chirality.flipped();
    for f in &mut mirrored.frames {
        f.pose = mirror_pose(&f.pose);
    }
    Ok(MirrorOutcome::Mirrored {
        hand: mirrored,
        object: object.iter().map(mirror_pose).collect(),
    })
}
