//! Hand keypoints → parallel-jaw gripper poses and commands.

mod gesture;
mod gripper_state;
mod hand;
mod pose;

pub use gesture::{
    classify_gesture, gesture_features, Exemplar, GestureClass, GestureClassifier, DEFAULT_K,
    FEATURE_DIM,
};
pub use gripper_state::{
    apply_hysteresis, detect_gripper_state, raw_gripper_states, GripperStateConfig, KeypointTrack,
    DEFAULT_HYSTERESIS, DEFAULT_THRESHOLD_2D, DEFAULT_THRESHOLD_3D, DEFAULT_WINDOW,
};
pub use hand::{HandFrame, Keypoint, BONES, MAX_BONE, MIN_BONE, NUM_KEYPOINTS};
pub use pose::{gripper_pose_fingeronly, gripper_pose_wholehand, PalmSign, AXIS_EPS};

use log::warn;

use crate::error::{Error, Result};
use crate::geom::{Pose, Vec3};
use crate::trajectory::{GripperCommand, GripperFrame, GripperTrajectory};

/// Longest run of degenerate frames that is filled by interpolation.
pub const MAX_GAP: usize = 3;

#[derive(Clone, Debug)]
pub struct RetargetConfig {
    /// Palm-to-tool offset along the palm normal (m).
    pub d_z: f64,
    pub palm_sign: PalmSign,
    /// Forces the gesture instead of classifying.
    pub gesture: Option<GestureClass>,
    pub gripper_state: GripperStateConfig,
    pub fps: f64,
}

impl Default for RetargetConfig {
    fn default() -> Self {
        RetargetConfig {
            d_z: 0.0,
            palm_sign: PalmSign::Handedness,
            gesture: None,
            gripper_state: GripperStateConfig::default(),
            fps: 30.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RetargetOutput {
    pub trajectory: GripperTrajectory,
    pub gesture: GestureClass,
    /// Frames whose pose was interpolated across a degenerate gap.
    pub filled_frames: Vec<usize>,
    pub warnings: Vec<String>,
}

fn frame_pose(
    frame: &HandFrame,
    gesture: GestureClass,
    cfg: &RetargetConfig,
    object: Option<&Vec3>,
) -> Result<Pose> {
    match gesture {
        GestureClass::WholeHand => {
            let w = frame.kp(Keypoint::Wrist);
            let i = frame.kp(Keypoint::IndexMcp);
            let r = frame.kp(Keypoint::RingMcp);
            let origin = (w + i + r) / 3.0;
            let normal = (i - w).cross(&(r - w));
            let rule = match (cfg.palm_sign, object) {
                (PalmSign::Handedness, Some(o)) => PalmSign::Toward(*o),
                (rule, _) => rule,
            };
            let sign = rule.resolve(frame.handedness, &origin, &normal);
            gripper_pose_wholehand(frame, cfg.d_z, sign)
        }
        GestureClass::FingerOnly => gripper_pose_fingeronly(frame),
    }
}

/// Fills runs of `None` no longer than [`MAX_GAP`]; interior gaps are
/// interpolated, gaps at either end hold the nearest defined pose.
fn fill_gaps(poses: &mut [Option<Pose>]) -> Result<Vec<usize>> {
    let n = poses.len();
    let mut filled = Vec::new();
    let mut i = 0;
    while i < n {
        if poses[i].is_some() {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && poses[i].is_none() {
            i += 1;
        }
        let end = i; // exclusive
        let len = end - start;
        if len > MAX_GAP {
            return Err(Error::DegeneratePalm(format!(
                "{len} consecutive degenerate frames starting at {start}"
            )));
        }
        let before = start.checked_sub(1).and_then(|j| poses[j]);
        let after = poses.get(end).copied().flatten();
        for (k, slot) in poses[start..end].iter_mut().enumerate() {
            *slot = match (before, after) {
                (Some(a), Some(b)) => {
                    let s = (k + 1) as f64 / (len + 1) as f64;
                    Some(a.interpolate(&b, s))
                }
                (Some(a), None) => Some(a),
                (None, Some(b)) => Some(b),
                (None, None) => {
                    return Err(Error::DegeneratePalm("no valid frame in clip".into()));
                }
            };
        }
        filled.extend(start..end);
    }
    Ok(filled)
}

/// Retargets a hand clip to a gripper trajectory.
///
/// The gesture is fixed per clip. `object_centroids`, when present, orients
/// the palm normal toward the object for whole-hand poses.
pub fn retarget_trajectory(
    frames: &[HandFrame],
    tracks: Option<&KeypointTrack>,
    classifier: Option<&GestureClassifier>,
    object_centroids: Option<&[Vec3]>,
    cfg: &RetargetConfig,
) -> Result<RetargetOutput> {
    if frames.is_empty() {
        return Err(Error::invalid("cannot retarget an empty clip"));
    }
    if let Some(obj) = object_centroids {
        if obj.len() != frames.len() {
            return Err(Error::LengthMismatch {
                a: "hand".into(),
                len_a: frames.len(),
                b: "object".into(),
                len_b: obj.len(),
            });
        }
    }
    let gesture = match (cfg.gesture, classifier) {
        (Some(g), _) => g,
        (None, Some(c)) => c.classify_clip(frames)?,
        (None, None) => GestureClass::WholeHand,
    };

    let mut warnings = Vec::new();
    let mut poses: Vec<Option<Pose>> = frames
        .iter()
        .enumerate()
        .map(|(t, f)| frame_pose(f, gesture, cfg, object_centroids.map(|o| &o[t])).ok())
        .collect();
    let filled = fill_gaps(&mut poses)?;
    if !filled.is_empty() {
        let msg = format!("interpolated {} degenerate frame(s): {:?}", filled.len(), filled);
        warn!("{msg}");
        warnings.push(msg);
    }

    let commands = match tracks {
        Some(tr) => {
            if tr.len() != frames.len() {
                return Err(Error::LengthMismatch {
                    a: "hand".into(),
                    len_a: frames.len(),
                    b: "keypoint track".into(),
                    len_b: tr.len(),
                });
            }
            detect_gripper_state(tr, &cfg.gripper_state)?
        }
        None => {
            warnings.push("no keypoint track; gripper held open".into());
            vec![GripperCommand::Open; frames.len()]
        }
    };

    let handedness = frames[0].handedness;
    let out_frames = poses
        .into_iter()
        .zip(commands)
        .map(|(p, c)| GripperFrame::new(p.expect("gaps filled"), c))
        .collect();
    Ok(RetargetOutput {
        trajectory: GripperTrajectory::new(cfg.fps, handedness, out_frames),
        gesture,
        filled_frames: filled,
        warnings,
    })
}
