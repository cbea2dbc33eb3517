//! Deterministic synthetic data: hands, chains, trajectories and the bundled
//! end-to-end fixture. Used by tests, the web demo and `hoi2bot fixture`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom::{so3_exp, Pose, Rot3, Vec3};
use crate::retarget::{HandFrame, NUM_KEYPOINTS};
use crate::trajectory::Handedness;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HandShape {
    /// Open palm, fingers bent toward the palm normal by `curl` rad per joint.
    Flat { curl: f64 },
    /// Index and thumb tips `aperture` m apart, other fingers folded.
    Pinch { aperture: f64 },
}

const FINGER_BASE_X: [f64; 4] = [0.025, 0.0, -0.02, -0.038];
const FINGER_BASE_Y: [f64; 4] = [0.09, 0.095, 0.088, 0.078];
const SEGMENTS: [f64; 3] = [0.04, 0.025, 0.02];

fn finger_chain(base: Vec3, curl: f64) -> [Vec3; 4] {
    let mut out = [base; 4];
    let mut dir = Vec3::y();
    let mut p = base;
    for (i, len) in SEGMENTS.iter().enumerate() {
        // Bend toward −z (palm side).
        dir = Rot3::rot_x(-curl) * dir;
        p += dir * *len;
        out[i + 1] = p;
    }
    out
}

/// A right or left hand in its local frame: wrist at the origin, fingers
/// along +y, palm normal along +z for the right hand.
pub fn synthetic_hand(shape: HandShape, handedness: Handedness) -> HandFrame {
    let mut kps = [Vec3::zeros(); NUM_KEYPOINTS];
    let (curls, thumb_tip_override) = match shape {
        HandShape::Flat { curl } => ([curl; 4], None),
        HandShape::Pinch { aperture } => ([0.55, 1.2, 1.3, 1.3], Some(aperture)),
    };
    for f in 0..4 {
        let base = Vec3::new(FINGER_BASE_X[f], FINGER_BASE_Y[f], 0.0);
        let chain = finger_chain(base, curls[f]);
        kps[5 + 4 * f..9 + 4 * f].copy_from_slice(&chain);
    }
    kps[1] = Vec3::new(0.022, 0.02, -0.005);
    kps[2] = Vec3::new(0.045, 0.042, -0.012);
    kps[3] = Vec3::new(0.058, 0.068, -0.02);
    kps[4] = Vec3::new(0.062, 0.092, -0.026);
    if let Some(aperture) = thumb_tip_override {
        let index_tip = kps[8];
        kps[4] = index_tip + Vec3::new(aperture, 0.0, 0.0);
        kps[3] = (kps[2] + kps[4]) * 0.5 + Vec3::new(0.01, 0.0, 0.0);
    }
    if handedness == Handedness::Left {
        for p in kps.iter_mut() {
            p.x = -p.x;
        }
    }
    HandFrame::new(kps, handedness)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_unit(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.05 && n <= 1.0 {
            return v / n;
        }
    }
}

pub fn random_rotation(rng: &mut impl Rng) -> Rot3 {
    let axis = random_unit(rng);
    so3_exp(&(axis * rng.random_range(0.0..PI)))
}

pub fn random_pose(rng: &mut impl Rng, trans_range: f64) -> Pose {
    Pose::new(
        random_rotation(rng),
        Vec3::new(
            rng.random_range(-trans_range..trans_range),
            rng.random_range(-trans_range..trans_range),
            rng.random_range(-trans_range..trans_range),
        ),
    )
}

/// Smooth random pose stream built from a few sinusoids per coordinate.
pub fn smooth_pose_stream(rng: &mut impl Rng, frames: usize, trans_amp: f64, rot_amp: f64) -> Vec<Pose> {
    let base = random_pose(rng, 0.5);
    let mut coeffs = [[0.0f64; 3]; 6];
    for c in coeffs.iter_mut() {
        *c = [
            rng.random_range(-1.0..1.0),
            rng.random_range(0.5..3.0),
            rng.random_range(0.0..2.0 * PI),
        ];
    }
    (0..frames)
        .map(|t| {
            let s = t as f64 / frames.max(1) as f64;
            let wave = |i: usize| coeffs[i][0] * (2.0 * PI * coeffs[i][1] * s + coeffs[i][2]).sin();
            let dt = Vec3::new(wave(0), wave(1), wave(2)) * trans_amp;
            let dw = Vec3::new(wave(3), wave(4), wave(5)) * rot_amp;
            base.compose(&Pose::new(so3_exp(&dw), dt))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_hands_are_valid() {
        for h in [Handedness::Left, Handedness::Right] {
            for shape in [HandShape::Flat { curl: 0.0 }, HandShape::Flat { curl: 0.4 }, HandShape::Pinch { aperture: 0.02 }] {
                synthetic_hand(shape, h).validate().unwrap();
            }
        }
    }

    #[test]
    fn right_palm_normal_points_up() {
        let f = synthetic_hand(HandShape::Flat { curl: 0.0 }, Handedness::Right);
        let n = (f.keypoints[5] - f.keypoints[0]).cross(&(f.keypoints[13] - f.keypoints[0]));
        assert!(n.z > 0.0, "{n:?}");
    }
}
