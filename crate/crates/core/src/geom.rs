//! Rigid-body primitives: rotations, poses, axis-angle maps and boxes.
//!
//! Rotations are stored as 3×3 matrices. Quaternions only appear at the I/O
//! boundary ([`Rot3::from_quaternion_wxyz`] / [`Rot3::to_quaternion_wxyz`]).

use std::f64::consts::PI;
use std::ops::Mul;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Tolerance used when validating rotation matrices.
pub const ROT_TOL: f64 = 1e-9;

/// Quaternions within this distance of unit norm are silently renormalized.
pub const QUAT_RENORM_TOL: f64 = 1e-6;
/// Quaternions further than this from unit norm are rejected.
pub const QUAT_REJECT_TOL: f64 = 1e-3;

/// A proper rotation (orthonormal columns, determinant +1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rot3(Mat3);

impl Default for Rot3 {
    fn default() -> Self {
        Self::identity()
    }
}

impl Rot3 {
    pub fn identity() -> Self {
        Rot3(Mat3::identity())
    }

    /// Wraps a matrix after checking orthonormality and determinant to [`ROT_TOL`].
    pub fn from_matrix(m: Mat3) -> Result<Self> {
        if !m.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("rotation has non-finite entries"));
        }
        let r = Rot3(m);
        if !r.is_valid(ROT_TOL) {
            return Err(Error::invalid(format!(
                "matrix is not a proper rotation (det {:.3e})",
                m.determinant()
            )));
        }
        Ok(r)
    }

    /// Wraps a matrix the caller already knows to be a rotation.
    pub(crate) fn from_matrix_unchecked(m: Mat3) -> Self {
        Rot3(m)
    }

    /// Builds a rotation from a primary and a secondary column axis with
    /// Gram-Schmidt. The primary axis is kept exactly (after normalization),
    /// the secondary is projected orthogonal to it and the remaining column is
    /// completed by the right-hand rule.
    pub fn from_axes_gram_schmidt(
        primary: (usize, Vec3),
        secondary: (usize, Vec3),
    ) -> Result<Self> {
        let (a, va) = primary;
        let (b, vb) = secondary;
        if a > 2 || b > 2 || a == b {
            return Err(Error::invalid("axis indices must be distinct and < 3"));
        }
        let ea = va
            .try_normalize(1e-12)
            .ok_or_else(|| Error::DegenerateFrame("zero-length primary axis".into()))?;
        let eb = (vb - ea * ea.dot(&vb))
            .try_normalize(1e-12)
            .ok_or_else(|| Error::DegenerateFrame("secondary axis parallel to primary".into()))?;
        let c = 3 - a - b;
        let ec = if b == (a + 1) % 3 { ea.cross(&eb) } else { eb.cross(&ea) };
        let mut cols = [Vec3::zeros(); 3];
        cols[a] = ea;
        cols[b] = eb;
        cols[c] = ec;
        Ok(Rot3(Mat3::from_columns(&cols)))
    }

    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        match axis.try_normalize(1e-15) {
            Some(a) => so3_exp(&(a * angle)),
            None => Self::identity(),
        }
    }

    pub fn rot_x(angle: f64) -> Self {
        Self::from_axis_angle(&Vec3::x(), angle)
    }

    pub fn rot_y(angle: f64) -> Self {
        Self::from_axis_angle(&Vec3::y(), angle)
    }

    pub fn rot_z(angle: f64) -> Self {
        Self::from_axis_angle(&Vec3::z(), angle)
    }

    /// Fixed-axis roll/pitch/yaw as used by URDF: `Rz(yaw)·Ry(pitch)·Rx(roll)`.
    pub fn from_rpy(roll: f64, pitch: f64, yaw: f64) -> Self {
        Self::rot_z(yaw) * Self::rot_y(pitch) * Self::rot_x(roll)
    }

    /// Ingests a `[w, x, y, z]` quaternion, renormalizing small deviations and
    /// rejecting norms more than 1e-3 away from one.
    pub fn from_quaternion_wxyz(q: [f64; 4]) -> Result<Self> {
        if !q.iter().all(|v| v.is_finite()) {
            return Err(Error::BadQuaternion(f64::NAN));
        }
        let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (n - 1.0).abs() > QUAT_REJECT_TOL {
            return Err(Error::BadQuaternion(n));
        }
        let [w, x, y, z] = q.map(|v| v / n);
        let m = Mat3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        );
        Ok(Rot3(m))
    }

    /// Quaternion `[w, x, y, z]` with `w ≥ 0`.
    pub fn to_quaternion_wxyz(&self) -> [f64; 4] {
        let m = &self.0;
        let tr = m.trace();
        let (w, x, y, z);
        if tr > 0.0 {
            let s = (tr + 1.0).sqrt() * 2.0;
            w = 0.25 * s;
            x = (m[(2, 1)] - m[(1, 2)]) / s;
            y = (m[(0, 2)] - m[(2, 0)]) / s;
            z = (m[(1, 0)] - m[(0, 1)]) / s;
        } else if m[(0, 0)] > m[(1, 1)] && m[(0, 0)] > m[(2, 2)] {
            let s = (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt() * 2.0;
            w = (m[(2, 1)] - m[(1, 2)]) / s;
            x = 0.25 * s;
            y = (m[(0, 1)] + m[(1, 0)]) / s;
            z = (m[(0, 2)] + m[(2, 0)]) / s;
        } else if m[(1, 1)] > m[(2, 2)] {
            let s = (1.0 + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).sqrt() * 2.0;
            w = (m[(0, 2)] - m[(2, 0)]) / s;
            x = (m[(0, 1)] + m[(1, 0)]) / s;
            y = 0.25 * s;
            z = (m[(1, 2)] + m[(2, 1)]) / s;
        } else {
            let s = (1.0 + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).sqrt() * 2.0;
            w = (m[(1, 0)] - m[(0, 1)]) / s;
            x = (m[(0, 2)] + m[(2, 0)]) / s;
            y = (m[(1, 2)] + m[(2, 1)]) / s;
            z = 0.25 * s;
        }
        let n = (w * w + x * x + y * y + z * z).sqrt();
        let sign = if w < 0.0 { -1.0 } else { 1.0 };
        [w, x, y, z].map(|v| sign * v / n)
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn column(&self, i: usize) -> Vec3 {
        self.0.column(i).into_owned()
    }

    pub fn inverse(&self) -> Self {
        Rot3(self.0.transpose())
    }

    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    /// Geodesic angle to `other`, in `[0, π]`.
    pub fn angle_to(&self, other: &Rot3) -> f64 {
        so3_log(&(self.inverse() * *other)).norm()
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        let rtr = self.0.transpose() * self.0;
        (rtr - Mat3::identity()).abs().max() <= tol && (self.0.determinant() - 1.0).abs() <= tol
    }
}

impl Mul for Rot3 {
    type Output = Rot3;
    fn mul(self, rhs: Rot3) -> Rot3 {
        Rot3(self.0 * rhs.0)
    }
}

impl Mul<Vec3> for Rot3 {
    type Output = Vec3;
    fn mul(self, rhs: Vec3) -> Vec3 {
        self.0 * rhs
    }
}

fn hat(w: &Vec3) -> Mat3 {
    Mat3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Rodrigues' formula.
pub fn so3_exp(w: &Vec3) -> Rot3 {
    let theta2 = w.norm_squared();
    let k = hat(w);
    let (a, b) = if theta2 < 1e-10 {
        // Taylor terms of sinθ/θ and (1−cosθ)/θ².
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        let theta = theta2.sqrt();
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    Rot3(Mat3::identity() + k * a + k * k * b)
}

/// Axis-angle vector of `r` with norm in `[0, π]`.
pub fn so3_log(r: &Rot3) -> Vec3 {
    let m = r.matrix();
    let v = Vec3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]);
    let s = 0.5 * v.norm();
    let c = (0.5 * (m.trace() - 1.0)).clamp(-1.0, 1.0);
    let theta = s.atan2(c);

    if c > -0.9 {
        // θ < ~154°: the antisymmetric part carries the axis well.
        let scale = if theta < 1e-6 {
            0.5 * (1.0 + theta * theta / 6.0)
        } else {
            0.5 * theta / theta.sin()
        };
        return v * scale;
    }

    // Near π use the symmetric part: (R + Rᵀ)/2 − cosθ·I = (1 − cosθ)·aaᵀ.
    let b = (m + m.transpose()) * 0.5 - Mat3::identity() * c;
    let k = (0..3)
        .max_by(|&i, &j| b[(i, i)].total_cmp(&b[(j, j)]))
        .unwrap_or(0);
    let mut axis = b.column(k).into_owned().normalize();
    if axis.dot(&v) < 0.0 {
        axis = -axis;
    }
    axis * theta
}

/// Rigid transform `x ↦ rot·x + trans`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Pose {
    pub rot: Rot3,
    pub trans: Vec3,
}

impl Pose {
    pub fn new(rot: Rot3, trans: Vec3) -> Self {
        Pose { rot, trans }
    }

    pub fn identity() -> Self {
        Pose::default()
    }

    pub fn from_translation(t: Vec3) -> Self {
        Pose::new(Rot3::identity(), t)
    }

    pub fn from_rotation(r: Rot3) -> Self {
        Pose::new(r, Vec3::zeros())
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rot.inverse();
        Pose::new(rt, -(rt * self.trans))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Pose) -> Self {
        Pose::new(self.rot * other.rot, self.rot * other.trans + self.trans)
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.rot * *p + self.trans
    }

    /// `self⁻¹ ∘ other`.
    pub fn relative_to(&self, other: &Pose) -> Pose {
        self.inverse().compose(other)
    }

    /// Linear in translation, geodesic in rotation; `s` in `[0, 1]`.
    pub fn interpolate(&self, other: &Pose, s: f64) -> Pose {
        let delta = so3_log(&(self.rot.inverse() * other.rot));
        Pose::new(
            self.rot * so3_exp(&(delta * s)),
            self.trans + (other.trans - self.trans) * s,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.trans.iter().chain(self.rot.matrix().iter()).all(|v| v.is_finite())
    }
}

impl Mul for Pose {
    type Output = Pose;
    fn mul(self, rhs: Pose) -> Pose {
        self.compose(&rhs)
    }
}

/// Translation distance (m) and geodesic rotation distance (rad) between poses.
pub fn pose_geodesic(a: &Pose, b: &Pose) -> (f64, f64) {
    ((a.trans - b.trans).norm(), a.rot.angle_to(&b.rot))
}

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Result<Self> {
        if (0..3).any(|i| !(min[i] <= max[i]) || !min[i].is_finite() || !max[i].is_finite()) {
            return Err(Error::invalid("aabb min must be ≤ max and finite"));
        }
        Ok(Aabb {
            min: min.into(),
            max: max.into(),
        })
    }

    /// Bounding box of a point set; `None` if the set is empty.
    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let (mut lo, mut hi) = (*first, *first);
        for p in it {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        Some(Aabb {
            min: lo.into(),
            max: hi.into(),
        })
    }

    pub fn min(&self) -> Vec3 {
        Vec3::from(self.min)
    }

    pub fn max(&self) -> Vec3 {
        Vec3::from(self.max)
    }

    pub fn extents(&self) -> Vec3 {
        self.max() - self.min()
    }

    pub fn center(&self) -> Vec3 {
        (self.max() + self.min()) * 0.5
    }

    pub fn diagonal(&self) -> f64 {
        self.extents().norm()
    }

    pub fn volume(&self) -> f64 {
        self.extents().product()
    }

    pub fn padded(&self, pad: f64) -> Aabb {
        Aabb {
            min: (self.min() - Vec3::repeat(pad)).into(),
            max: (self.max() + Vec3::repeat(pad)).into(),
        }
    }

    /// Intersection over union; 0 when the union has zero volume.
    pub fn iou(&self, other: &Aabb) -> f64 {
        let lo = self.min().sup(&other.min());
        let hi = self.max().inf(&other.max());
        let overlap = (hi - lo).map(|d| d.max(0.0)).product();
        let union = self.volume() + other.volume() - overlap;
        if union <= 0.0 {
            return 0.0;
        }
        (overlap / union).clamp(0.0, 1.0)
    }
}

pub fn aabb_iou(a: &Aabb, b: &Aabb) -> f64 {
    a.iou(b)
}

/// Wraps an angle to `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut x = (a + PI).rem_euclid(2.0 * PI) - PI;
    if x <= -PI {
        x += 2.0 * PI;
    }
    x
}
