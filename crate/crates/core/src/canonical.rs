//! World lifting and the canonical action frame.
//!
//! Reconstructions arrive in the camera frame. They are lifted to the world
//! with the camera-to-world transform and then re-expressed in a task-centric
//! frame: `z` along the scene up direction, `y` along the dominant hand→object
//! approach direction, `x = y × z`, with the origin at the object position of
//! a reference frame `t0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Aabb, Pose, Rot3, Vec3};

/// Minimum angle between `up` and `approach` for a usable frame.
pub const MIN_FRAME_ANGLE: f64 = 1e-3;

/// Hand–object distance (m) below which a frame counts as salient.
pub const SALIENT_DISTANCE: f64 = 0.15;

/// Pinhole intrinsics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::invalid("focal lengths must be positive"));
        }
        if !(0.0 <= self.cx && self.cx < self.width as f64) {
            return Err(Error::invalid("cx outside image"));
        }
        if !(0.0 <= self.cy && self.cy < self.height as f64) {
            return Err(Error::invalid("cy outside image"));
        }
        Ok(())
    }
}

/// Back-projects masked depth pixels into camera-frame points.
///
/// `depth` and `mask` are row-major `height × width` buffers; pixel `(u, v)`
/// is column `u`, row `v`. Non-finite and non-positive depths are skipped.
pub fn backproject(depth: &[f64], mask: &[bool], cam: &CameraModel) -> Result<Vec<Vec3>> {
    cam.validate()?;
    let n = cam.width as usize * cam.height as usize;
    if depth.len() != n || mask.len() != n {
        return Err(Error::invalid(format!(
            "depth ({}) and mask ({}) must both have {n} pixels",
            depth.len(),
            mask.len()
        )));
    }
    let w = cam.width as usize;
    let points = depth
        .iter()
        .zip(mask)
        .enumerate()
        .filter(|(_, (d, m))| **m && d.is_finite() && **d > 0.0)
        .map(|(idx, (&d, _))| {
            let u = (idx % w) as f64;
            let v = (idx / w) as f64;
            Vec3::new((u - cam.cx) * d / cam.fx, (v - cam.cy) * d / cam.fy, d)
        })
        .collect();
    Ok(points)
}

/// Metric scale of an unscaled mesh from the ratio of bounding-box diagonals.
pub fn recover_scale(points: &[Vec3], unscaled_mesh_aabb: &Aabb) -> Result<f64> {
    let mesh_diag = unscaled_mesh_aabb.diagonal();
    if !(mesh_diag > 0.0) {
        return Err(Error::DegenerateObservation("mesh bounding box has zero diagonal".into()));
    }
    let obs_diag = Aabb::from_points(points).map(|b| b.diagonal()).unwrap_or(0.0);
    if !(obs_diag > 0.0) || !obs_diag.is_finite() {
        return Err(Error::DegenerateObservation(
            "observed points span a zero-size box".into(),
        ));
    }
    Ok(obs_diag / mesh_diag)
}

/// Body landmarks and directions used to build the canonical frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodyAnchors {
    pub hip_left: [f64; 3],
    pub hip_right: [f64; 3],
    pub shoulder_left: [f64; 3],
    pub shoulder_right: [f64; 3],
    pub up: [f64; 3],
    pub approach: [f64; 3],
}

impl BodyAnchors {
    /// Anchors with only the two directions known; body landmarks at the origin.
    pub fn from_directions(up: Vec3, approach: Vec3) -> Self {
        BodyAnchors {
            hip_left: [0.0; 3],
            hip_right: [0.0; 3],
            shoulder_left: [0.0; 3],
            shoulder_right: [0.0; 3],
            up: up.into(),
            approach: approach.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.hip_left,
            self.hip_right,
            self.shoulder_left,
            self.shoulder_right,
            self.up,
            self.approach,
        ];
        if !all.iter().flatten().all(|v| v.is_finite()) {
            return Err(Error::invalid("body anchors must be finite"));
        }
        let up = Vec3::from(self.up);
        let ap = Vec3::from(self.approach);
        if up.norm() < 1e-12 || ap.norm() < 1e-12 {
            return Err(Error::DegenerateFrame("zero-length up or approach".into()));
        }
        let angle = up.normalize().dot(&ap.normalize()).abs().min(1.0).acos();
        if angle <= MIN_FRAME_ANGLE {
            return Err(Error::DegenerateFrame("approach is parallel to up".into()));
        }
        Ok(())
    }

    /// Lateral body vector (left minus right, hips plus shoulders) projected
    /// onto the plane orthogonal to `up`. `None` when the landmarks carry no
    /// lateral information.
    pub fn lateral(&self) -> Option<Vec3> {
        let v = (Vec3::from(self.hip_left) - Vec3::from(self.hip_right))
            + (Vec3::from(self.shoulder_left) - Vec3::from(self.shoulder_right));
        let up = Vec3::from(self.up).try_normalize(1e-12)?;
        (v - up * up.dot(&v)).try_normalize(1e-9)
    }
}

/// World-to-canonical transform and the reference frame it was anchored at.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CanonicalTransform {
    pub world_to_canonical: Pose,
    pub t0: usize,
    /// Cosine between the canonical `x` axis and the body lateral vector, when
    /// the anchors provide one. Negative values mean the subject faces away
    /// from the conventional side; the frame itself is not flipped.
    pub lateral_agreement: Option<f64>,
}

/// Builds the canonical frame from the anchors and the object position at `t0`.
pub fn build_canonical_frame(
    anchors: &BodyAnchors,
    object_pos_t0: &Vec3,
    t0: usize,
) -> Result<CanonicalTransform> {
    anchors.validate()?;
    let z = Vec3::from(anchors.up).normalize();
    let ap = Vec3::from(anchors.approach);
    let y = (ap - z * z.dot(&ap))
        .try_normalize(1e-12)
        .ok_or_else(|| Error::DegenerateFrame("approach is parallel to up".into()))?;
    let x = y.cross(&z);
    // Rows of the world→canonical rotation are the canonical axes in world coordinates.
    let rot = Rot3::from_matrix_unchecked(crate::geom::Mat3::from_rows(&[
        x.transpose(),
        y.transpose(),
        z.transpose(),
    ]));
    let trans = -(rot * *object_pos_t0);
    Ok(CanonicalTransform {
        world_to_canonical: Pose::new(rot, trans),
        t0,
        lateral_agreement: anchors.lateral().map(|l| l.dot(&x)),
    })
}

/// Left-multiplies every pose by the world→canonical transform.
pub fn apply_canonical(transform: &CanonicalTransform, poses: &[Pose]) -> Vec<Pose> {
    poses
        .iter()
        .map(|p| transform.world_to_canonical.compose(p))
        .collect()
}

/// Lifts camera-frame poses to the world frame.
pub fn lift_to_world(cam_to_world: &Pose, poses: &[Pose]) -> Vec<Pose> {
    poses.iter().map(|p| cam_to_world.compose(p)).collect()
}

/// Mean unit wrist→object direction over the closest quarter of frames.
pub fn estimate_approach(wrist: &[Vec3], object: &[Vec3]) -> Option<Vec3> {
    let dists: Vec<f64> = wrist
        .iter()
        .zip(object)
        .map(|(w, o)| (o - w).norm())
        .collect();
    if dists.is_empty() {
        return None;
    }
    let mut sorted = dists.clone();
    sorted.sort_by(f64::total_cmp);
    // Nearest-rank 25th percentile.
    let rank = ((0.25 * sorted.len() as f64).ceil() as usize).max(1) - 1;
    let cutoff = sorted[rank];
    let sum = wrist
        .iter()
        .zip(object)
        .zip(&dists)
        .filter(|(_, d)| **d <= cutoff)
        .filter_map(|((w, o), _)| (o - w).try_normalize(1e-12))
        .fold(Vec3::zeros(), |acc, v| acc + v);
    sum.try_normalize(1e-12)
}

/// First frame whose hand–object distance drops below `threshold`; falls back
/// to the closest frame when none does.
pub fn first_salient_frame(wrist: &[Vec3], object: &[Vec3], threshold: f64) -> Option<usize> {
    let dists: Vec<f64> = wrist
        .iter()
        .zip(object)
        .map(|(w, o)| (o - w).norm())
        .collect();
    dists.iter().position(|d| *d < threshold).or_else(|| {
        dists
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
    })
}
