//! Gripper pose construction from hand keypoints.
//!
//! Two constructions: a palm frame for whole-hand grasps and an index/thumb
//! frame for pinches.

use super::hand::{HandFrame, Keypoint};
use crate::error::{Error, Result};
use crate::geom::{Pose, Rot3, Vec3};
use crate::trajectory::Handedness;

/// Minimum cross-product norm for a usable axis.
pub const AXIS_EPS: f64 = 1e-8;

/// How the palm normal sign is chosen for whole-hand poses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PalmSign {
    /// +1 for right hands, −1 for left hands.
    Handedness,
    /// Flip the normal so it points from the palm toward this point; falls
    /// back to handedness when the point lies in the palm plane.
    Toward(Vec3),
    Fixed(f64),
}

impl PalmSign {
    pub(crate) fn resolve(&self, handedness: Handedness, origin: &Vec3, normal: &Vec3) -> f64 {
        let by_hand = match handedness {
            Handedness::Right => 1.0,
            Handedness::Left => -1.0,
        };
        match self {
            PalmSign::Handedness => by_hand,
            PalmSign::Fixed(s) => {
                if *s < 0.0 {
                    -1.0
                } else {
                    1.0
                }
            }
            PalmSign::Toward(target) => {
                let d = normal.dot(&(target - origin));
                if d > 0.0 {
                    1.0
                } else if d < 0.0 {
                    -1.0
                } else {
                    by_hand
                }
            }
        }
    }
}

/// Palm-frame pose from wrist, index MCP and ring MCP.
///
/// `x` runs wrist→ring MCP, `z` is the palm normal scaled by `sign`,
/// `y = z × x`, and the origin is the keypoint centroid pushed `d_z` along `z`.
pub fn gripper_pose_wholehand(frame: &HandFrame, d_z: f64, sign: f64) -> Result<Pose> {
    wholehand_from_points(
        frame.kp(Keypoint::Wrist),
        frame.kp(Keypoint::IndexMcp),
        frame.kp(Keypoint::RingMcp),
        d_z,
        sign,
    )
}

pub(crate) fn wholehand_from_points(w: Vec3, i: Vec3, r: Vec3, d_z: f64, sign: f64) -> Result<Pose> {
    let origin = (w + i + r) / 3.0;
    let vx = r - w;
    let vz = (i - w).cross(&vx);
    if vz.norm() <= AXIS_EPS || vx.norm() <= AXIS_EPS {
        return Err(Error::DegeneratePalm(
            "wrist, index MCP and ring MCP are collinear".into(),
        ));
    }
    let sign = if sign < 0.0 { -1.0 } else { 1.0 };
    let rot = Rot3::from_axes_gram_schmidt((0, vx), (2, vz * sign))?;
    let z = rot.column(2);
    Ok(Pose::new(rot, origin + z * d_z))
}

/// Pinch pose from index tip/MCP and thumb tip/MCP.
///
/// `z` runs index MCP→tip, `y ∝ (tip − mcp) × (mcp − thumb MCP)`, `x = y × z`,
/// and the origin is the index/thumb tip midpoint.
pub fn gripper_pose_fingeronly(frame: &HandFrame) -> Result<Pose> {
    let tip = frame.kp(Keypoint::IndexTip);
    let mcp = frame.kp(Keypoint::IndexMcp);
    let thumb_tip = frame.kp(Keypoint::ThumbTip);
    let thumb_mcp = frame.kp(Keypoint::ThumbMcp);
    fingeronly_from_points(tip, mcp, thumb_tip, thumb_mcp)
}

pub(crate) fn fingeronly_from_points(
    tip: Vec3,
    mcp: Vec3,
    thumb_tip: Vec3,
    thumb_mcp: Vec3,
) -> Result<Pose> {
    let vz = tip - mcp;
    let vy = vz.cross(&(mcp - thumb_mcp));
    if vz.norm() <= AXIS_EPS || vy.norm() <= AXIS_EPS {
        return Err(Error::DegeneratePalm("index/thumb axes are degenerate".into()));
    }
    let rot = Rot3::from_axes_gram_schmidt((2, vz), (1, vy))?;
    Ok(Pose::new(rot, (thumb_tip + tip) * 0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retarget::hand::NUM_KEYPOINTS;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn frame_with(points: &[(Keypoint, Vec3)]) -> HandFrame {
        let mut kps = [Vec3::zeros(); NUM_KEYPOINTS];
        for (k, p) in points {
            kps[*k as usize] = *p;
        }
        HandFrame::new(kps, Handedness::Right)
    }

    #[test]
    fn wholehand_worked_example() {
        let f = frame_with(&[
            (Keypoint::Wrist, Vec3::zeros()),
            (Keypoint::IndexMcp, Vec3::new(0.0, 1.0, 0.0)),
            (Keypoint::RingMcp, Vec3::new(1.0, 0.0, 0.0)),
        ]);
        let p = gripper_pose_wholehand(&f, 0.0, 1.0).unwrap();
        let third = 1.0 / 3.0;
        assert_abs_diff_eq!(p.trans, Vec3::new(third, third, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(p.rot.column(0), Vec3::new(1.0, 0.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(p.rot.column(1), Vec3::new(0.0, -1.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(p.rot.column(2), Vec3::new(0.0, 0.0, -1.0), epsilon = 1e-15);
        let q = gripper_pose_wholehand(&f, 0.05, 1.0).unwrap();
        assert_abs_diff_eq!(q.trans, Vec3::new(third, third, -0.05), epsilon = 1e-15);
        assert!(p.rot.is_valid(1e-12));
    }

    #[test]
    fn wholehand_negative_sign_stays_proper() {
        let f = frame_with(&[
            (Keypoint::IndexMcp, Vec3::new(0.0, 1.0, 0.0)),
            (Keypoint::RingMcp, Vec3::new(1.0, 0.0, 0.0)),
        ]);
        let p = gripper_pose_wholehand(&f, 0.0, -1.0).unwrap();
        assert!(p.rot.is_valid(1e-12));
        assert_abs_diff_eq!(p.rot.column(2), Vec3::new(0.0, 0.0, 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(p.rot.column(0), Vec3::new(1.0, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn wholehand_collinear_is_degenerate() {
        let f = frame_with(&[
            (Keypoint::IndexMcp, Vec3::new(0.0, 1.0, 0.0)),
            (Keypoint::RingMcp, Vec3::new(0.0, 2.0, 0.0)),
        ]);
        assert!(matches!(gripper_pose_wholehand(&f, 0.0, 1.0), Err(Error::DegeneratePalm(_))));
    }

    #[test]
    fn fingeronly_worked_example() {
        let f = frame_with(&[
            (Keypoint::IndexTip, Vec3::new(0.0, 0.0, 0.1)),
            (Keypoint::IndexMcp, Vec3::zeros()),
            (Keypoint::ThumbTip, Vec3::new(0.03, 0.0, 0.09)),
            (Keypoint::ThumbMcp, Vec3::new(0.02, -0.02, 0.0)),
        ]);
        let p = gripper_pose_fingeronly(&f).unwrap();
        assert_abs_diff_eq!(p.trans, Vec3::new(0.015, 0.0, 0.095), epsilon = 1e-15);
        assert_abs_diff_eq!(p.rot.column(2), Vec3::new(0.0, 0.0, 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(p.rot.column(1), Vec3::new(-FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(p.rot.column(0), Vec3::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn fingeronly_degenerate_and_coincident_tips() {
        let f = frame_with(&[(Keypoint::ThumbMcp, Vec3::new(0.02, -0.02, 0.0))]);
        assert!(gripper_pose_fingeronly(&f).is_err());

        let f = frame_with(&[
            (Keypoint::IndexTip, Vec3::new(0.0, 0.0, 0.1)),
            (Keypoint::ThumbTip, Vec3::new(0.0, 0.0, 0.1)),
            (Keypoint::ThumbMcp, Vec3::new(0.02, -0.02, 0.0)),
        ]);
        let p = gripper_pose_fingeronly(&f).unwrap();
        assert_eq!(p.trans, Vec3::new(0.0, 0.0, 0.1));
        assert!(p.rot.is_valid(1e-12));
    }

    #[test]
    fn palm_sign_rules() {
        let o = Vec3::zeros();
        let n = Vec3::z();
        assert_eq!(PalmSign::Handedness.resolve(Handedness::Left, &o, &n), -1.0);
        assert_eq!(PalmSign::Handedness.resolve(Handedness::Right, &o, &n), 1.0);
        assert_eq!(PalmSign::Toward(Vec3::new(0.0, 0.0, -1.0)).resolve(Handedness::Right, &o, &n), -1.0);
        assert_eq!(PalmSign::Toward(Vec3::x()).resolve(Handedness::Left, &o, &n), -1.0);
        assert_eq!(PalmSign::Fixed(-3.0).resolve(Handedness::Right, &o, &n), -1.0);
    }
}
