//! wasm bindings for the browser demo in `www/`.
//!
//! Everything crosses the boundary as flat `f64` arrays; layouts are noted
//! on each function.

use hoi2bot::augment::{remap_open, ProgressMode, Segment, SegmentState};
use hoi2bot::geom::{Pose, Rot3, Vec3};
use hoi2bot::plausibility::{
    build_tsdf, resolve_penetration, HandSurface, ResolveOptions, TriMesh, TsdfGrid, TsdfParams,
};
use hoi2bot::retarget::{gripper_pose_fingeronly, gripper_pose_wholehand};
use hoi2bot::synth::{synthetic_hand, HandShape};
use hoi2bot::trajectory::{GripperCommand, GripperFrame, GripperTrajectory, Handedness};
use hoi2bot::Error;
use wasm_bindgen::prelude::*;

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Half-width of the square shown in the TSDF view, in meters.
pub const VIEW_HALF: f64 = 0.15;

fn shape_mesh(shape: u32) -> TriMesh {
    match shape {
        0 => TriMesh::icosphere(Vec3::zeros(), 0.08, 3),
        1 => TriMesh::cuboid(Vec3::new(-0.09, -0.05, -0.04), Vec3::new(0.09, 0.05, 0.04)),
        _ => {
            let mut m = TriMesh::icosphere(Vec3::zeros(), 1.0, 3);
            for v in m.vertices.iter_mut() {
                *v = v.component_mul(&Vec3::new(0.11, 0.05, 0.06));
            }
            m
        }
    }
}

/// A truncated signed distance field of one of the demo shapes
/// (0 sphere, 1 box, 2 ellipsoid).
#[wasm_bindgen]
pub struct Field {
    grid: TsdfGrid,
}

#[wasm_bindgen]
impl Field {
    #[wasm_bindgen(constructor)]
    pub fn new(shape: u32, voxel: f64) -> Result<Field, JsError> {
        Field::build(shape, voxel).map_err(js)
    }

    pub fn trunc(&self) -> f64 {
        self.grid.trunc()
    }

    /// `n × n` samples of the z = 0 plane over ±`VIEW_HALF`, row-major with
    /// y increasing downwards.
    pub fn slice(&self, n: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(n * n);
        for row in 0..n {
            for col in 0..n {
                out.push(self.grid.query(&plane_point(col, row, n)));
            }
        }
        out
    }

    /// Pushes a small disc of 12 points centred at (x, y, 0) out of the
    /// shape. Returns `[energy_before, energy_after, iterations, x0, y0,
    /// x1, y1, ...]` with the disc points before and after, interleaved
    /// per point.
    pub fn resolve(&self, x: f64, y: f64, radius: f64) -> Result<Vec<f64>, JsError> {
        self.resolve_disc(x, y, radius).map_err(js)
    }
}

impl Field {
    pub fn build(shape: u32, voxel: f64) -> hoi2bot::Result<Field> {
        let params = TsdfParams::from_voxel(voxel.clamp(0.002, 0.02));
        Ok(Field {
            grid: build_tsdf(&shape_mesh(shape), &params)?,
        })
    }

    pub fn resolve_disc(&self, x: f64, y: f64, radius: f64) -> hoi2bot::Result<Vec<f64>> {
        let pts: Vec<Vec3> = (0..12)
            .map(|i| {
                let a = i as f64 / 12.0 * std::f64::consts::TAU;
                Vec3::new(a.cos(), a.sin(), 0.0) * radius
            })
            .collect();
        let surface = HandSurface::new(pts, vec![0, 3, 6, 9])?;
        let start = Pose::from_translation(Vec3::new(x, y, 0.0));
        let res = resolve_penetration(&start, &surface, &self.grid, &ResolveOptions::default());
        let before = res.energies.first().copied().unwrap_or(res.energy);
        let mut out = vec![before, res.energy, res.iterations as f64];
        for p in &surface.points {
            let (a, b) = (start.transform_point(p), res.pose.transform_point(p));
            out.extend([a.x, a.y, b.x, b.y]);
        }
        Ok(out)
    }
}

fn plane_point(col: usize, row: usize, n: usize) -> Vec3 {
    let s = |i: usize| (i as f64 + 0.5) / n as f64 * 2.0 * VIEW_HALF - VIEW_HALF;
    Vec3::new(s(col), -s(row), 0.0)
}

/// Retargets a synthetic hand to a gripper pose.
///
/// `pinch` selects the fingertip gesture (parameter = aperture in m)
/// instead of the whole-hand one (parameter = finger curl in rad).
/// `yaw` and `pitch` rotate the hand. Returns the 21 keypoints (63 values)
/// followed by the gripper origin and its x, y, z axes (12 values).
#[wasm_bindgen]
pub fn retarget_hand(pinch: bool, param: f64, yaw: f64, pitch: f64, left: bool) -> Result<Vec<f64>, JsError> {
    hand_and_gripper(pinch, param, yaw, pitch, left).map_err(js)
}

pub fn hand_and_gripper(pinch: bool, param: f64, yaw: f64, pitch: f64, left: bool) -> hoi2bot::Result<Vec<f64>> {
    let handedness = if left { Handedness::Left } else { Handedness::Right };
    let shape = if pinch {
        HandShape::Pinch { aperture: param.clamp(0.0, 0.08) }
    } else {
        HandShape::Flat { curl: param.clamp(0.0, 1.5) }
    };
    let view = Pose::new(Rot3::from_rpy(pitch, 0.0, yaw), Vec3::zeros());
    let hand = synthetic_hand(shape, handedness).transformed(&view);
    let g = if pinch {
        gripper_pose_fingeronly(&hand)
    } else {
        let sign = if left { -1.0 } else { 1.0 };
        gripper_pose_wholehand(&hand, 0.02, sign)
    }?;
    let mut out: Vec<f64> = hand.keypoints.iter().flat_map(|k| [k.x, k.y, k.z]).collect();
    out.extend([g.trans.x, g.trans.y, g.trans.z]);
    let m = g.rot.matrix();
    for c in 0..3 {
        out.extend([m[(0, c)], m[(1, c)], m[(2, c)]]);
    }
    Ok(out)
}

/// Remaps a 2-D polyline `[x0, y0, x1, y1, ...]` so that it runs between
/// new endpoints, keeping its shape. `arc_length` picks the progress
/// measure. Returns the remapped polyline in the same layout.
#[wasm_bindgen]
pub fn remap_path(points: &[f64], sx: f64, sy: f64, ex: f64, ey: f64, arc_length: bool) -> Result<Vec<f64>, JsError> {
    remap_polyline(points, [sx, sy], [ex, ey], arc_length).map_err(js)
}

/// See [`remap_path`].
pub fn remap_polyline(points: &[f64], start: [f64; 2], end: [f64; 2], arc_length: bool) -> hoi2bot::Result<Vec<f64>> {
    if points.len() < 4 || !points.len().is_multiple_of(2) {
        return Err(Error::InvalidInput("need at least two (x, y) points".into()));
    }
    let frames: Vec<GripperFrame> = points
        .chunks(2)
        .map(|p| GripperFrame::new(Pose::from_translation(Vec3::new(p[0], p[1], 0.0)), GripperCommand::Open))
        .collect();
    let n = frames.len();
    let traj = GripperTrajectory::new(30.0, Handedness::Right, frames);
    let seg = Segment {
        start: 0,
        end: n - 1,
        state: SegmentState::Open,
    };
    let mode = if arc_length { ProgressMode::ArcLength } else { ProgressMode::FrameIndex };
    let anchors = (Vec3::new(start[0], start[1], 0.0), Vec3::new(end[0], end[1], 0.0));
    let out = remap_open(&traj, &seg, anchors, &Rot3::identity(), mode)?;
    Ok(out.iter().flat_map(|f| [f.pose.trans.x, f.pose.trans.y]).collect())
}
