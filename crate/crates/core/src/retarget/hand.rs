use crate::error::{Error, Result};
use crate::geom::{Pose, Vec3};
use crate::trajectory::Handedness;

pub const NUM_KEYPOINTS: usize = 21;

/// Bone-length bounds (m) for adjacent hand joints.
pub const MIN_BONE: f64 = 0.005;
pub const MAX_BONE: f64 = 0.12;

/// The 21-landmark hand layout: wrist, then four joints per finger from base
/// to tip (thumb, index, middle, ring, pinky).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(usize)]
pub enum Keypoint {
    Wrist = 0,
    ThumbCmc,
    ThumbMcp,
    ThumbIp,
    ThumbTip,
    IndexMcp,
    IndexPip,
    IndexDip,
    IndexTip,
    MiddleMcp,
    MiddlePip,
    MiddleDip,
    MiddleTip,
    RingMcp,
    RingPip,
    RingDip,
    RingTip,
    PinkyMcp,
    PinkyPip,
    PinkyDip,
    PinkyTip,
}

/// `(parent, child)` pairs of the hand skeleton.
pub const BONES: [(usize, usize); 20] = [
    (0, 1),
    (1, 2),
    (2, 3),
    (3, 4),
    (0, 5),
    (5, 6),
    (6, 7),
    (7, 8),
    (0, 9),
    (9, 10),
    (10, 11),
    (11, 12),
    (0, 13),
    (13, 14),
    (14, 15),
    (15, 16),
    (0, 17),
    (17, 18),
    (18, 19),
    (19, 20),
];

/// Hand state at one timestep, in world coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct HandFrame {
    pub keypoints: [Vec3; NUM_KEYPOINTS],
    pub handedness: Handedness,
    pub wrist_pose: Pose,
}

impl HandFrame {
    /// Frame with the wrist pose placed at the wrist keypoint.
    pub fn new(keypoints: [Vec3; NUM_KEYPOINTS], handedness: Handedness) -> Self {
        let wrist_pose = Pose::from_translation(keypoints[0]);
        HandFrame {
            keypoints,
            handedness,
            wrist_pose,
        }
    }

    pub fn kp(&self, k: Keypoint) -> Vec3 {
        self.keypoints[k as usize]
    }

    /// Checks finiteness and bone lengths.
    pub fn validate(&self) -> Result<()> {
        if !self.keypoints.iter().all(|p| p.iter().all(|v| v.is_finite())) {
            return Err(Error::invalid("hand keypoints must be finite"));
        }
        for &(a, b) in &BONES {
            let len = (self.keypoints[a] - self.keypoints[b]).norm();
            if !(MIN_BONE..=MAX_BONE).contains(&len) {
                return Err(Error::invalid(format!(
                    "bone {a}-{b} has length {len:.4} m outside [{MIN_BONE}, {MAX_BONE}]"
                )));
            }
        }
        Ok(())
    }

    /// Applies a rigid transform to every keypoint and the wrist pose.
    pub fn transformed(&self, t: &Pose) -> HandFrame {
        HandFrame {
            keypoints: self.keypoints.map(|p| t.transform_point(&p)),
            handedness: self.handedness,
            wrist_pose: t.compose(&self.wrist_pose),
        }
    }
}
