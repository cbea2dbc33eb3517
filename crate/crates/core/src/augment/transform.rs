//! Object-frame transforms of hold segments and residual-preserving
//! remapping of open segments.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{so3_log, Pose, Rot3, Vec3};
use crate::trajectory::{GripperFrame, GripperTrajectory};

use super::segment::{segment_trajectory, Segment, SegmentState};

pub const DEFAULT_ROTATION_CAP: f64 = 0.3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProgressMode {
    #[default]
    ArcLength,
    FrameIndex,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AugmentSpec {
    pub object_transform: Pose,
    /// Replacement endpoints per open segment, in segment order.
    pub open_anchors: Vec<Option<(Vec3, Vec3)>>,
    pub rotation_cap: f64,
    pub progress: ProgressMode,
}

impl AugmentSpec {
    pub fn new(object_transform: Pose) -> Self {
        AugmentSpec {
            object_transform,
            open_anchors: Vec::new(),
            rotation_cap: DEFAULT_ROTATION_CAP,
            progress: ProgressMode::ArcLength,
        }
    }

    pub fn check_cap(&self) -> Result<()> {
        check_cap(&self.object_transform.rot, self.rotation_cap)
    }
}

fn check_cap(r: &Rot3, cap: f64) -> Result<()> {
    let angle = so3_log(r).norm();
    if angle > cap {
        return Err(Error::RotationCap { angle, cap });
    }
    Ok(())
}

fn check_segment(traj: &GripperTrajectory, seg: &Segment, state: SegmentState) -> Result<()> {
    if seg.state != state {
        return Err(Error::invalid(format!("expected a {state:?} segment, got {:?}", seg.state)));
    }
    if seg.start > seg.end || seg.end >= traj.len() {
        return Err(Error::invalid(format!(
            "segment [{}, {}] outside trajectory of {} frames",
            seg.start,
            seg.end,
            traj.len()
        )));
    }
    Ok(())
}

/// Left-multiplies every waypoint of a hold segment by `t_o`.
pub fn transform_hold(
    traj: &GripperTrajectory,
    seg: &Segment,
    t_o: &Pose,
    rotation_cap: f64,
) -> Result<Vec<GripperFrame>> {
    check_segment(traj, seg, SegmentState::Hold)?;
    check_cap(&t_o.rot, rotation_cap)?;
    Ok(traj.frames[seg.range()]
        .iter()
        .map(|f| GripperFrame {
            pose: t_o.compose(&f.pose),
            ..*f
        })
        .collect())
}

/// Progress of each frame along the segment, 0 at the start and 1 at the end.
pub fn progress(points: &[Vec3], mode: ProgressMode) -> Vec<f64> {
    let n = points.len();
    if n < 2 {
        return vec![0.0; n];
    }
    match mode {
        ProgressMode::FrameIndex => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
        ProgressMode::ArcLength => {
            let mut cum = Vec::with_capacity(n);
            let mut acc = 0.0;
            cum.push(0.0);
            for w in points.windows(2) {
                acc += (w[1] - w[0]).norm();
                cum.push(acc);
            }
            if acc == 0.0 {
                return (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
            }
            cum.iter().map(|c| c / acc).collect()
        }
    }
}

/// Moves an open segment onto new endpoints while keeping each frame's
/// deviation from the original start→end chord.
pub fn remap_open(
    traj: &GripperTrajectory,
    seg: &Segment,
    anchors: (Vec3, Vec3),
    r_delta: &Rot3,
    mode: ProgressMode,
) -> Result<Vec<GripperFrame>> {
    check_segment(traj, seg, SegmentState::Open)?;
    if seg.len() < 2 {
        return Err(Error::invalid("open segment needs at least 2 frames"));
    }
    let frames = &traj.frames[seg.range()];
    let pts: Vec<Vec3> = frames.iter().map(|f| f.pose.trans).collect();
    let (ps, pe) = (pts[0], pts[pts.len() - 1]);
    let (qs, qe) = anchors;
    if ps == pe && qs != qe {
        return Err(Error::DegenerateChord);
    }
    let alpha = progress(&pts, mode);
    Ok(frames
        .iter()
        .zip(alpha)
        .map(|(f, a)| {
            let chord = ps * (1.0 - a) + pe * a;
            let p = qs * (1.0 - a) + qe * a + (f.pose.trans - chord);
            GripperFrame {
                pose: Pose::new(*r_delta * f.pose.rot, p),
                ..*f
            }
        })
        .collect())
}

/// Applies `spec` to the whole trajectory. Open-segment endpoints adjacent
/// to a hold follow the object transform; others keep their original
/// position unless an explicit anchor is given.
pub fn augment_trajectory(traj: &GripperTrajectory, spec: &AugmentSpec) -> Result<GripperTrajectory> {
    spec.check_cap()?;
    let t_o = &spec.object_transform;
    let segs = segment_trajectory(traj);
    let mut frames = Vec::with_capacity(traj.len());
    let mut open_idx = 0;
    for (k, seg) in segs.iter().enumerate() {
        match seg.state {
            SegmentState::Hold => frames.extend(transform_hold(traj, seg, t_o, spec.rotation_cap)?),
            SegmentState::Open => {
                let ps = traj.frames[seg.start].pose.trans;
                let pe = traj.frames[seg.end].pose.trans;
                let follows = |j: Option<usize>| j.and_then(|j| segs.get(j)).is_some_and(|s| s.state == SegmentState::Hold);
                let default = (
                    if follows(k.checked_sub(1)) { t_o.transform_point(&ps) } else { ps },
                    if follows(Some(k + 1)) { t_o.transform_point(&pe) } else { pe },
                );
                let anchors = spec.open_anchors.get(open_idx).copied().flatten().unwrap_or(default);
                open_idx += 1;
                if seg.len() == 1 {
                    let f = traj.frames[seg.start];
                    frames.push(GripperFrame {
                        pose: Pose::new(t_o.rot * f.pose.rot, anchors.0),
                        ..f
                    });
                } else {
                    frames.extend(remap_open(traj, seg, anchors, &t_o.rot, spec.progress)?);
                }
            }
        }
    }
    Ok(GripperTrajectory {
        frames,
        ..traj.clone()
    })
}

/// Bounds for randomly drawn augmentations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentSampling {
    pub rotation_cap: f64,
    /// Object shift drawn uniformly in ±max_translation on x and y.
    pub max_translation: f64,
    /// Reachable box for free open-segment endpoints.
    pub reach_min: [f64; 3],
    pub reach_max: [f64; 3],
    pub progress: ProgressMode,
}

impl Default for AugmentSampling {
    fn default() -> Self {
        AugmentSampling {
            rotation_cap: DEFAULT_ROTATION_CAP,
            max_translation: 0.05,
            reach_min: [-0.3, -0.4, 0.0],
            reach_max: [0.3, 0.1, 0.35],
            progress: ProgressMode::ArcLength,
        }
    }
}

/// Draws an object yaw/shift within the caps and reachable endpoints for
/// open segments that do not touch a hold.
pub fn sample_augment_spec(traj: &GripperTrajectory, s: &AugmentSampling, rng: &mut impl Rng) -> AugmentSpec {
    let yaw = rng.random_range(-s.rotation_cap..=s.rotation_cap);
    let shift = Vec3::new(
        rng.random_range(-s.max_translation..=s.max_translation),
        rng.random_range(-s.max_translation..=s.max_translation),
        0.0,
    );
    let t_o = Pose::new(Rot3::rot_z(yaw), shift);
    let reach = |rng: &mut dyn rand::RngCore| -> Vec3 {
        Vec3::from_fn(|i, _| rng.random_range(s.reach_min[i]..=s.reach_max[i]))
    };
    let segs = segment_trajectory(traj);
    let mut anchors = Vec::new();
    for (k, seg) in segs.iter().enumerate() {
        if seg.state != SegmentState::Open {
            continue;
        }
        let prev_hold = k > 0 && segs[k - 1].state == SegmentState::Hold;
        let next_hold = segs.get(k + 1).is_some_and(|n| n.state == SegmentState::Hold);
        let ps = traj.frames[seg.start].pose.trans;
        let pe = traj.frames[seg.end].pose.trans;
        let start = if prev_hold { t_o.transform_point(&ps) } else { reach(rng) };
        let end = if next_hold { t_o.transform_point(&pe) } else { reach(rng) };
        anchors.push(Some((start, end)));
    }
    AugmentSpec {
        object_transform: t_o,
        open_anchors: anchors,
        rotation_cap: s.rotation_cap,
        progress: s.progress,
    }
}
