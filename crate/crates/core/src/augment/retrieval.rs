//! Substitute-object retrieval: fused shape/aspect/semantic cost and
//! principal-axis binding of the chosen substitute.

use log::warn;
use nalgebra::SymmetricEigen;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Mat3, Pose, Rot3, Vec3};
use crate::plausibility::{tri_area, TriMesh};
use crate::pointcloud::chamfer_distance;
use crate::synth::rng;

#[derive(Clone, Debug, PartialEq)]
pub struct ObjectAsset {
    pub id: String,
    pub mesh: TriMesh,
    pub canonical_pose: Pose,
    pub category: String,
    pub embedding: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimilarityWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub surface_samples: usize,
    /// Seed for surface sampling; shared by all assets so equal meshes give
    /// equal samples.
    pub seed: u64,
}

impl Default for SimilarityWeights {
    fn default() -> Self {
        SimilarityWeights {
            alpha: 1.0,
            beta: 0.5,
            gamma: 0.5,
            surface_samples: 1024,
            seed: 0,
        }
    }
}

impl SimilarityWeights {
    pub fn validate(&self) -> Result<()> {
        let w = [self.alpha, self.beta, self.gamma];
        if w.iter().any(|x| !(*x >= 0.0)) || w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::invalid("similarity weights must be ≥ 0 with a positive sum"));
        }
        if self.surface_samples == 0 {
            return Err(Error::invalid("surface_samples must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoreBreakdown {
    pub chamfer: f64,
    pub aspect_iou: f64,
    /// Cosine similarity; `None` when either embedding is missing.
    pub cosine: Option<f64>,
    pub total: f64,
    pub warnings: Vec<String>,
}

/// Mesh translated to its box centre and scaled so the longest extent is 1.
pub fn normalize_to_unit_box(mesh: &TriMesh) -> Result<(TriMesh, Vec3)> {
    let bb = mesh.aabb().ok_or_else(|| Error::invalid("empty mesh"))?;
    let ext = bb.extents();
    let m = ext.max();
    if !(m > 0.0) {
        return Err(Error::invalid("degenerate mesh with zero extent"));
    }
    let c = bb.center();
    let out = TriMesh::new(mesh.vertices.iter().map(|v| (v - c) / m).collect(), mesh.triangles.clone())?;
    Ok((out, ext / m))
}

struct Prepared {
    samples: Vec<Vec3>,
    aspect: Vec3,
}

fn prepare(asset: &ObjectAsset, w: &SimilarityWeights) -> Result<Prepared> {
    let (unit, aspect) =
        normalize_to_unit_box(&asset.mesh).map_err(|e| Error::invalid(format!("asset {}: {e}", asset.id)))?;
    let samples = unit.sample_surface(w.surface_samples, &mut rng(w.seed));
    if samples.is_empty() {
        return Err(Error::invalid(format!("asset {} has no surface", asset.id)));
    }
    Ok(Prepared { samples, aspect })
}

/// IoU of two origin-centred boxes with the given extents.
fn aspect_iou(a: &Vec3, b: &Vec3) -> f64 {
    let inter = a.inf(b).product();
    let union = a.product() + b.product() - inter;
    if union > 0.0 {
        inter / union
    } else if a == b {
        1.0
    } else {
        0.0
    }
}

fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!("embedding dimension {} vs {}", a.len(), b.len())));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::invalid("zero embedding"));
    }
    Ok(dot / (na * nb))
}

fn score_prepared(
    src: &Prepared,
    src_asset: &ObjectAsset,
    cand: &Prepared,
    cand_asset: &ObjectAsset,
    w: &SimilarityWeights,
) -> Result<ScoreBreakdown> {
    let chamfer = chamfer_distance(&src.samples, &cand.samples)?;
    let iou = aspect_iou(&src.aspect, &cand.aspect);
    let mut warnings = Vec::new();
    let cos = match (&src_asset.embedding, &cand_asset.embedding) {
        (Some(a), Some(b)) => Some(cosine(a, b)?),
        _ => {
            if w.gamma > 0.0 {
                let msg = format!("missing embedding for {} or {}; semantic term dropped", src_asset.id, cand_asset.id);
                warn!("{msg}");
                warnings.push(msg);
            }
            None
        }
    };
    let total = w.alpha * chamfer + w.beta * (1.0 - iou) + cos.map_or(0.0, |c| w.gamma * (1.0 - c));
    Ok(ScoreBreakdown {
        chamfer,
        aspect_iou: iou,
        cosine: cos,
        total,
        warnings,
    })
}

/// Matching cost between two assets; lower is better.
pub fn retrieval_score(source: &ObjectAsset, candidate: &ObjectAsset, w: &SimilarityWeights) -> Result<ScoreBreakdown> {
    w.validate()?;
    score_prepared(&prepare(source, w)?, source, &prepare(candidate, w)?, candidate, w)
}

/// Top-`k` library entries by ascending cost, ties broken by id.
pub fn rank_substitutes(
    source: &ObjectAsset,
    library: &[ObjectAsset],
    w: &SimilarityWeights,
    k: usize,
) -> Result<Vec<(String, ScoreBreakdown)>> {
    w.validate()?;
    if library.is_empty() {
        return Err(Error::invalid("empty asset library"));
    }
    let src = prepare(source, w)?;
    let mut scored: Vec<(String, ScoreBreakdown)> = library
        .par_iter()
        .map(|a| Ok((a.id.clone(), score_prepared(&src, source, &prepare(a, w)?, a, w)?)))
        .collect::<Result<_>>()?;
    scored.sort_by(|a, b| a.1.total.total_cmp(&b.1.total).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(scored)
}

/// Similarity transform x ↦ scale·R·x + trans that places the substitute
/// mesh over the source.
#[derive(Clone, Debug, PartialEq)]
pub struct Binding {
    pub scale: f64,
    pub rotation: Rot3,
    pub trans: Vec3,
    pub canonical_pose: Pose,
    /// Object pose stream, reused unchanged.
    pub object_poses: Vec<Pose>,
    pub pca_fallback: bool,
    pub warnings: Vec<String>,
}

impl Binding {
    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * (p * self.scale) + self.trans
    }

    pub fn apply_mesh(&self, mesh: &TriMesh) -> TriMesh {
        TriMesh::new(mesh.vertices.iter().map(|v| self.apply(v)).collect(), mesh.triangles.clone())
            .expect("indices unchanged")
    }
}

/// Area-weighted mean and covariance of the mesh surface.
pub fn surface_moments(mesh: &TriMesh) -> (Vec3, Mat3) {
    let mut area = 0.0;
    let mut first = Vec3::zeros();
    let mut second = Mat3::zeros();
    for i in 0..mesh.triangles.len() {
        let t = mesh.triangle(i);
        let a = tri_area(&t);
        let s = t[0] + t[1] + t[2];
        area += a;
        first += s * (a / 3.0);
        second += (t[0] * t[0].transpose() + t[1] * t[1].transpose() + t[2] * t[2].transpose() + s * s.transpose())
            * (a / 12.0);
    }
    let mean = first / area;
    (mean, second / area - mean * mean.transpose())
}

const EIGEN_TIE: f64 = 1e-6;

/// Principal axes as matrix columns, largest variance first, each with its
/// largest-magnitude component positive and completed right-handed.
/// `None` when two eigenvalues coincide.
fn principal_axes(mesh: &TriMesh) -> Option<Mat3> {
    let (unit, _) = normalize_to_unit_box(mesh).ok()?;
    let (_, cov) = surface_moments(&unit);
    let eig = SymmetricEigen::new(cov);
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let l = idx.map(|i| eig.eigenvalues[i]);
    if (l[0] - l[1]).abs() < EIGEN_TIE || (l[1] - l[2]).abs() < EIGEN_TIE {
        return None;
    }
    let fix = |v: Vec3| if v[v.iamax()] < 0.0 { -v } else { v };
    let e0 = fix(eig.eigenvectors.column(idx[0]).into_owned());
    let e1 = fix(eig.eigenvectors.column(idx[1]).into_owned());
    Some(Mat3::from_columns(&[e0, e1, e0.cross(&e1)]))
}

/// Scales the substitute to the source's longest box extent and aligns its
/// principal axes to the source's.
pub fn bind_substitute(object_poses: &[Pose], source: &ObjectAsset, substitute: &ObjectAsset) -> Result<Binding> {
    let sb = source.mesh.aabb().ok_or_else(|| Error::invalid("empty source mesh"))?;
    let cb = substitute.mesh.aabb().ok_or_else(|| Error::invalid("empty substitute mesh"))?;
    let (se, ce) = (sb.extents().max(), cb.extents().max());
    if !(se > 0.0 && ce > 0.0) {
        return Err(Error::invalid("degenerate mesh with zero extent"));
    }
    let scale = se / ce;
    let mut warnings = Vec::new();
    let (rotation, fallback) = match (principal_axes(&source.mesh), principal_axes(&substitute.mesh)) {
        (Some(ps), Some(pc)) => (Rot3::from_matrix_unchecked(ps * pc.transpose()), false),
        _ => {
            let msg = format!(
                "principal axes of {} or {} are degenerate; using box axes",
                source.id, substitute.id
            );
            warn!("{msg}");
            warnings.push(msg);
            (Rot3::identity(), true)
        }
    };
    let trans = sb.center() - rotation * (cb.center() * scale);
    Ok(Binding {
        scale,
        rotation,
        trans,
        canonical_pose: source.canonical_pose,
        object_poses: object_poses.to_vec(),
        pca_fallback: fallback,
        warnings,
    })
}
