//! Voxelized truncated signed distance fields (positive outside).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::Vec3;

use super::mesh::{closest_point_on_triangle, TriMesh};

pub const DEFAULT_VOXEL: f64 = 0.005;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TsdfParams {
    pub voxel: f64,
    pub trunc: f64,
    pub padding: f64,
}

impl Default for TsdfParams {
    fn default() -> Self {
        TsdfParams::from_voxel(DEFAULT_VOXEL)
    }
}

impl TsdfParams {
    /// τ = 4·voxel, padding = τ.
    pub fn from_voxel(voxel: f64) -> Self {
        TsdfParams {
            voxel,
            trunc: 4.0 * voxel,
            padding: 4.0 * voxel,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TsdfGrid {
    origin: Vec3,
    voxel: f64,
    dims: [usize; 3],
    trunc: f64,
    values: Vec<f64>,
}

impl TsdfGrid {
    pub fn origin(&self) -> Vec3 {
        self.origin
    }
    pub fn voxel(&self) -> f64 {
        self.voxel
    }
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }
    pub fn trunc(&self) -> f64 {
        self.trunc
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn value(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    pub fn voxel_center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin + Vec3::new(i as f64, j as f64, k as f64) * self.voxel
    }

    /// Trilinear interpolation; +τ outside the grid.
    pub fn query(&self, p: &Vec3) -> f64 {
        let f = (p - self.origin) / self.voxel;
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let hi = (self.dims[a] - 1) as f64;
            if !(f[a] >= 0.0 && f[a] <= hi) {
                return self.trunc;
            }
            let i0 = (f[a].floor() as usize).min(self.dims[a].saturating_sub(2));
            base[a] = i0;
            frac[a] = f[a] - i0 as f64;
        }
        let mut acc = 0.0;
        for corner in 0..8 {
            let off = [corner & 1, (corner >> 1) & 1, (corner >> 2) & 1];
            let mut w = 1.0;
            let mut idx = [0usize; 3];
            for a in 0..3 {
                idx[a] = (base[a] + off[a]).min(self.dims[a] - 1);
                w *= if off[a] == 1 { frac[a] } else { 1.0 - frac[a] };
            }
            if w != 0.0 {
                acc += w * self.value(idx[0], idx[1], idx[2]);
            }
        }
        acc
    }

    /// Central-difference gradient of the interpolated field.
    pub fn gradient(&self, p: &Vec3, eps: f64) -> Vec3 {
        let mut g = Vec3::zeros();
        for a in 0..3 {
            let mut e = Vec3::zeros();
            e[a] = eps;
            g[a] = (self.query(&(p + e)) - self.query(&(p - e))) / (2.0 * eps);
        }
        g
    }
}

pub fn query_sdf(grid: &TsdfGrid, p: &Vec3) -> f64 {
    grid.query(p)
}

/// Builds the clamped signed distance field of a watertight mesh.
///
/// Distances are exact point-triangle distances inside the truncation band.
/// Containment is voted by ray parity along the three grid axes; voxels where
/// the votes disagree are settled by the generalized winding number.
pub fn build_tsdf(mesh: &TriMesh, params: &TsdfParams) -> Result<TsdfGrid> {
    let TsdfParams { voxel, trunc, padding } = *params;
    if !(voxel > 0.0) || !(trunc >= voxel) || !(padding >= 0.0) {
        return Err(Error::invalid(format!(
            "need voxel > 0, trunc ≥ voxel, padding ≥ 0 (got {voxel}, {trunc}, {padding})"
        )));
    }
    if !mesh.is_watertight() {
        return Err(Error::SignUndefined("mesh is not watertight".into()));
    }
    let bb = mesh.aabb().ok_or_else(|| Error::invalid("empty mesh"))?;
    let origin = bb.min() - Vec3::repeat(padding);
    let span = bb.extents() + Vec3::repeat(2.0 * padding);
    let dims = [0, 1, 2].map(|a| ((span[a] / voxel).ceil() as usize + 1).max(2));
    let n = dims[0] * dims[1] * dims[2];
    let center = |i: usize, j: usize, k: usize| origin + Vec3::new(i as f64, j as f64, k as f64) * voxel;

    let tris: Vec<[Vec3; 3]> = (0..mesh.triangles.len()).map(|t| mesh.triangle(t)).collect();
    let tri_boxes: Vec<(Vec3, Vec3)> = tris
        .iter()
        .map(|t| {
            let lo = t[0].inf(&t[1]).inf(&t[2]);
            let hi = t[0].sup(&t[1]).sup(&t[2]);
            (lo, hi)
        })
        .collect();
    let to_range = |lo: f64, hi: f64, a: usize| -> Option<(usize, usize)> {
        let l = ((lo - origin[a]) / voxel).ceil().max(0.0);
        let h = ((hi - origin[a]) / voxel).floor().min((dims[a] - 1) as f64);
        (l <= h).then_some((l as usize, h as usize))
    };

    // Unsigned distance within the band, one z-slice per task.
    let slice = dims[0] * dims[1];
    let mut dist = vec![trunc; n];
    dist.par_chunks_mut(slice).enumerate().for_each(|(k, out)| {
        let z = origin.z + k as f64 * voxel;
        for (t, (lo, hi)) in tris.iter().zip(&tri_boxes) {
            if z < lo.z - trunc || z > hi.z + trunc {
                continue;
            }
            let (Some((i0, i1)), Some((j0, j1))) =
                (to_range(lo.x - trunc, hi.x + trunc, 0), to_range(lo.y - trunc, hi.y + trunc, 1))
            else {
                continue;
            };
            for j in j0..=j1 {
                for i in i0..=i1 {
                    let p = center(i, j, k);
                    let d = (p - closest_point_on_triangle(&p, &t[0], &t[1], &t[2])).norm();
                    let slot = &mut out[i + dims[0] * j];
                    if d < *slot {
                        *slot = d;
                    }
                }
            }
        }
    });

    // Parity votes along each axis.
    let mut votes = vec![0u8; n];
    for axis in 0..3 {
        let (b, c) = ((axis + 1) % 3, (axis + 2) % 3);
        let mut lines: Vec<Vec<f64>> = vec![Vec::new(); dims[b] * dims[c]];
        for (t, (lo, hi)) in tris.iter().zip(&tri_boxes) {
            let (Some((b0, b1)), Some((c0, c1))) = (to_range(lo[b], hi[b], b), to_range(lo[c], hi[c], c)) else {
                continue;
            };
            for jc in c0..=c1 {
                for jb in b0..=b1 {
                    let pb = origin[b] + jb as f64 * voxel;
                    let pc = origin[c] + jc as f64 * voxel;
                    if let Some(s) = line_hit(t, axis, b, c, pb, pc) {
                        lines[jb + dims[b] * jc].push(s);
                    }
                }
            }
        }
        let line_votes: Vec<(usize, usize, Vec<bool>)> = lines
            .into_par_iter()
            .enumerate()
            .map(|(li, mut hits)| {
                hits.sort_by(f64::total_cmp);
                let (jb, jc) = (li % dims[b], li / dims[b]);
                let mut inside = vec![false; dims[axis]];
                let mut h = 0;
                for (ia, slot) in inside.iter_mut().enumerate() {
                    let pa = origin[axis] + ia as f64 * voxel;
                    while h < hits.len() && hits[h] < pa {
                        h += 1;
                    }
                    *slot = h % 2 == 1;
                }
                (jb, jc, inside)
            })
            .collect();
        for (jb, jc, inside) in line_votes {
            for (ia, is_in) in inside.into_iter().enumerate() {
                if is_in {
                    let mut idx = [0; 3];
                    idx[axis] = ia;
                    idx[b] = jb;
                    idx[c] = jc;
                    votes[idx[0] + dims[0] * (idx[1] + dims[1] * idx[2])] += 1;
                }
            }
        }
    }

    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|idx| {
            let inside = match votes[idx] {
                0 => false,
                3 => true,
                _ => {
                    let (i, j, k) = (idx % dims[0], (idx / dims[0]) % dims[1], idx / slice);
                    mesh.winding_number(&center(i, j, k)).abs() > 0.5
                }
            };
            let d = dist[idx].min(trunc);
            if inside {
                -d
            } else {
                d
            }
        })
        .collect();

    Ok(TsdfGrid {
        origin,
        voxel,
        dims,
        trunc,
        values,
    })
}

/// Where the line {x_b = pb, x_c = pc} pierces triangle `t`, as a coordinate
/// along `axis`. Edges use a half-open rule so shared edges count once.
fn line_hit(t: &[Vec3; 3], axis: usize, b: usize, c: usize, pb: f64, pc: f64) -> Option<f64> {
    let p = [(t[0][b], t[0][c]), (t[1][b], t[1][c]), (t[2][b], t[2][c])];
    let edge = |u: (f64, f64), v: (f64, f64)| (v.0 - u.0) * (pc - u.1) - (v.1 - u.1) * (pb - u.0);
    let w = [edge(p[1], p[2]), edge(p[2], p[0]), edge(p[0], p[1])];
    let area = w[0] + w[1] + w[2];
    if area == 0.0 {
        return None;
    }
    let s = area.signum();
    let owns = |wi: f64, u: (f64, f64), v: (f64, f64)| {
        let wi = wi * s;
        if wi > 0.0 {
            return true;
        }
        if wi < 0.0 {
            return false;
        }
        // Top-left style tie break, independent of triangle orientation.
        let (dx, dy) = ((v.0 - u.0) * s, (v.1 - u.1) * s);
        dy > 0.0 || (dy == 0.0 && dx < 0.0)
    };
    if !(owns(w[0], p[1], p[2]) && owns(w[1], p[2], p[0]) && owns(w[2], p[0], p[1])) {
        return None;
    }
    Some((w[0] * t[0][axis] + w[1] * t[1][axis] + w[2] * t[2][axis]) / area)
}
