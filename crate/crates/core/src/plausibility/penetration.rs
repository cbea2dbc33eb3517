//! Hand–object penetration energy and its resolution by moving the wrist.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{pose_geodesic, so3_exp, Pose, Vec3};

use super::tsdf::TsdfGrid;

#[derive(Clone, Debug, PartialEq)]
pub struct HandSurface {
    pub points: Vec<Vec3>,
    pub palm_subset: Vec<usize>,
}

impl HandSurface {
    pub fn new(points: Vec<Vec3>, palm_subset: Vec<usize>) -> Result<Self> {
        if let Some(i) = palm_subset.iter().find(|&&i| i >= points.len()) {
            return Err(Error::invalid(format!("palm index {i} out of {} points", points.len())));
        }
        Ok(HandSurface { points, palm_subset })
    }

    pub fn transformed(&self, t: &Pose) -> HandSurface {
        HandSurface {
            points: self.points.iter().map(|p| t.transform_point(p)).collect(),
            palm_subset: self.palm_subset.clone(),
        }
    }

    fn selected(&self, subset: Subset) -> Box<dyn Iterator<Item = &Vec3> + '_> {
        match subset {
            Subset::All => Box::new(self.points.iter()),
            Subset::Palm => Box::new(self.palm_subset.iter().map(|&i| &self.points[i])),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    Palm,
    #[default]
    All,
}

/// Σ φ² over selected points with φ < 0; points are in the grid frame.
pub fn penetration_energy(surface: &HandSurface, subset: Subset, grid: &TsdfGrid) -> f64 {
    surface
        .selected(subset)
        .map(|p| grid.query(p))
        .filter(|&phi| phi < 0.0)
        .map(|phi| phi * phi)
        .sum()
}

/// Deepest (most negative) SDF value among selected points, or +τ if none.
pub fn min_depth(surface: &HandSurface, subset: Subset, grid: &TsdfGrid) -> f64 {
    surface
        .selected(subset)
        .map(|p| grid.query(p))
        .fold(grid.trunc(), f64::min)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResolveOptions {
    pub max_iterations: usize,
    /// Stop once the energy drops below this.
    pub tolerance: f64,
    /// Scales the first trial step of each line search.
    pub step_size: f64,
    pub max_rotation_step: f64,
    pub allow_rotation: bool,
    pub subset: Subset,
}

impl Default for ResolveOptions {
    fn default() -> Self {
        ResolveOptions {
            max_iterations: 100,
            tolerance: 1e-8,
            step_size: 1.5,
            max_rotation_step: 0.1,
            allow_rotation: true,
            subset: Subset::All,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Resolution {
    pub pose: Pose,
    pub energy: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Energy after each accepted step, starting with the initial energy.
    pub energies: Vec<f64>,
    /// (translation m, rotation rad) from the initial pose.
    pub displacement: (f64, f64),
}

fn apply(pose: &Pose, delta: &[f64; 6]) -> Pose {
    let dw = Vec3::new(delta[3], delta[4], delta[5]);
    Pose::new(pose.rot * so3_exp(&dw), pose.trans + Vec3::new(delta[0], delta[1], delta[2]))
}

/// Gradient descent on the wrist pose (translation plus local axis-angle)
/// with finite-difference gradients and a backtracking line search.
pub fn resolve_penetration(
    initial: &Pose,
    surface_local: &HandSurface,
    grid: &TsdfGrid,
    opts: &ResolveOptions,
) -> Resolution {
    let energy = |p: &Pose| penetration_energy(&surface_local.transformed(p), opts.subset, grid);
    let radius = surface_local
        .selected(opts.subset)
        .map(|p| p.norm())
        .fold(0.0, f64::max)
        .max(1e-3);
    let eps_t = grid.voxel() / 4.0;
    let eps_r = eps_t / radius;
    let dofs = if opts.allow_rotation { 6 } else { 3 };

    let mut pose = *initial;
    let mut e = energy(&pose);
    let mut energies = vec![e];
    let mut iterations = 0;
    while e >= opts.tolerance && iterations < opts.max_iterations {
        iterations += 1;
        let mut g = [0.0; 6];
        for (d, gd) in g.iter_mut().enumerate().take(dofs) {
            let h = if d < 3 { eps_t } else { eps_r };
            let mut plus = [0.0; 6];
            plus[d] = h;
            let mut minus = [0.0; 6];
            minus[d] = -h;
            *gd = (energy(&apply(&pose, &plus)) - energy(&apply(&pose, &minus))) / (2.0 * h);
        }
        let g2: f64 = g.iter().map(|x| x * x).sum();
        if g2 == 0.0 {
            break;
        }
        // For E = Σφ² with unit-gradient φ, α = 2E/|∇E|² steps onto the surface.
        let mut alpha = opts.step_size * 2.0 * e / g2;
        let mut accepted = false;
        for _ in 0..30 {
            let mut delta = g.map(|x| -alpha * x);
            let rot = (delta[3] * delta[3] + delta[4] * delta[4] + delta[5] * delta[5]).sqrt();
            if rot > opts.max_rotation_step {
                let k = opts.max_rotation_step / rot;
                for x in &mut delta[3..] {
                    *x *= k;
                }
            }
            let cand = apply(&pose, &delta);
            let ec = energy(&cand);
            if ec < e {
                pose = cand;
                e = ec;
                energies.push(e);
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Resolution {
        pose,
        energy: e,
        iterations,
        converged: e < opts.tolerance,
        energies,
        displacement: pose_geodesic(initial, &pose),
    }
}
