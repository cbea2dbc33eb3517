//! Reconstruction and trajectory quality metrics, reported in cm/degrees.

use nalgebra::SVD;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Mat3, Pose, Rot3, Vec3};
use crate::pointcloud::{chamfer_distance, nearest_distances, KdTree};

const CM: f64 = 100.0;

/// F-score (percent) of `pred` against `gt` at a distance threshold.
pub fn fscore(pred: &[Vec3], gt: &[Vec3], threshold: f64) -> Result<f64> {
    if pred.is_empty() || gt.is_empty() {
        return Err(Error::invalid("F-score of an empty point set"));
    }
    let within = |from: &[Vec3], to: &[Vec3]| {
        let tree = KdTree::new(to);
        nearest_distances(from, &tree).iter().filter(|d| **d <= threshold).count() as f64 / from.len() as f64
    };
    let p = within(pred, gt);
    let r = within(gt, pred);
    Ok(if p + r == 0.0 { 0.0 } else { 200.0 * p * r / (p + r) })
}

/// Mean second-difference acceleration magnitude in cm/s².
pub fn hand_jitter(positions: &[Vec3], fps: f64) -> Result<f64> {
    if positions.len() < 3 {
        return Err(Error::invalid(format!("jitter needs ≥ 3 frames, got {}", positions.len())));
    }
    if !(fps > 0.0) {
        return Err(Error::invalid("fps must be positive"));
    }
    let acc: f64 = positions
        .windows(3)
        .map(|w| (w[2] - w[1] * 2.0 + w[0]).norm() * fps * fps)
        .sum();
    Ok(acc / (positions.len() - 2) as f64 * CM)
}

/// Projection of the summed rotation matrices onto SO(3).
pub fn chordal_mean(rots: &[Rot3]) -> Result<Rot3> {
    if rots.is_empty() {
        return Err(Error::invalid("mean of no rotations"));
    }
    let sum: Mat3 = rots.iter().map(|r| *r.matrix()).sum();
    let svd = SVD::new(sum, true, true);
    let (u, vt) = (svd.u.expect("u"), svd.v_t.expect("v_t"));
    let mut d = Mat3::identity();
    if (u * vt).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    Ok(Rot3::from_matrix_unchecked(u * d * vt))
}

/// Spread of T_rel = T_h⁻¹·T_o over time: (translation std in cm, rotation
/// deviation in degrees).
///
/// Translation std is the square root of the summed per-axis variances.
/// Rotation uses the RMS geodesic angle to the chordal mean.
pub fn rel_pose_consistency(hand: &[Pose], object: &[Pose]) -> Result<(f64, f64)> {
    if hand.len() != object.len() {
        return Err(Error::LengthMismatch {
            a: "hand".into(),
            len_a: hand.len(),
            b: "object".into(),
            len_b: object.len(),
        });
    }
    if hand.len() < 2 {
        return Err(Error::invalid("relative-pose consistency needs ≥ 2 frames"));
    }
    let rel: Vec<Pose> = hand.iter().zip(object).map(|(h, o)| h.inverse().compose(o)).collect();
    let n = rel.len() as f64;
    let mean_t = rel.iter().map(|r| r.trans).sum::<Vec3>() / n;
    let var_t = rel.iter().map(|r| (r.trans - mean_t).norm_squared()).sum::<f64>() / n;
    let rots: Vec<Rot3> = rel.iter().map(|r| r.rot).collect();
    let mean_r = chordal_mean(&rots)?;
    let var_r = rots.iter().map(|r| mean_r.angle_to(r).powi(2)).sum::<f64>() / n;
    Ok((var_t.sqrt() * CM, var_r.sqrt().to_degrees()))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub chamfer_cm: Option<f64>,
    pub f5_pct: Option<f64>,
    pub f10_pct: Option<f64>,
    pub jitter_cm_s2: Option<f64>,
    pub rel_trans_std_cm: Option<f64>,
    pub rel_rot_std_deg: Option<f64>,
    pub fps: f64,
}

pub const CSV_HEADER: &str = "id,chamfer_cm,f5_pct,f10_pct,jitter_cm_s2,rel_trans_std_cm,rel_rot_std_deg,fps";

impl MetricReport {
    /// Fills every metric whose inputs are present.
    pub fn compute(
        wrist: &[Vec3],
        hand: Option<&[Pose]>,
        object: Option<&[Pose]>,
        recon: Option<(&[Vec3], &[Vec3])>,
        fps: f64,
    ) -> Result<Self> {
        let mut r = MetricReport {
            fps,
            ..Default::default()
        };
        if wrist.len() >= 3 {
            r.jitter_cm_s2 = Some(hand_jitter(wrist, fps)?);
        }
        if let (Some(h), Some(o)) = (hand, object) {
            if h.len() >= 2 {
                let (t, a) = rel_pose_consistency(h, o)?;
                r.rel_trans_std_cm = Some(t);
                r.rel_rot_std_deg = Some(a);
            }
        }
        if let Some((pred, gt)) = recon {
            r.chamfer_cm = Some(chamfer_distance(pred, gt)? * CM);
            r.f5_pct = Some(fscore(pred, gt, 0.005)?);
            r.f10_pct = Some(fscore(pred, gt, 0.010)?);
        }
        Ok(r)
    }

    pub fn csv_row(&self, id: &str) -> String {
        let f = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x}"));
        format!(
            "{id},{},{},{},{},{},{},{}",
            f(self.chamfer_cm),
            f(self.f5_pct),
            f(self.f10_pct),
            f(self.jitter_cm_s2),
            f(self.rel_trans_std_cm),
            f(self.rel_rot_std_deg),
            self.fps
        )
    }
}

/// Aggregate CSV with one row per `(id, report)`.
pub fn metrics_csv<'a>(rows: impl IntoIterator<Item = (&'a str, &'a MetricReport)>) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for (id, r) in rows {
        s.push_str(&r.csv_row(id));
        s.push('\n');
    }
    s
}
