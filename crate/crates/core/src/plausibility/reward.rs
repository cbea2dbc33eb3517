//! Tracking and contact reward for a single step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{pose_geodesic, Pose};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardSpec {
    pub lambda_geo: f64,
    pub lambda_dyn: f64,
    pub lambda_con: f64,
    pub sigma_geo: f64,
    pub sigma_dyn: f64,
    pub sigma_con: f64,
}

impl Default for RewardSpec {
    fn default() -> Self {
        RewardSpec {
            lambda_geo: 1.0,
            lambda_dyn: 0.5,
            lambda_con: 0.5,
            sigma_geo: 0.05,
            sigma_dyn: 0.5,
            sigma_con: 1.0,
        }
    }
}

impl RewardSpec {
    pub fn validate(&self) -> Result<()> {
        let l = [self.lambda_geo, self.lambda_dyn, self.lambda_con];
        let s = [self.sigma_geo, self.sigma_dyn, self.sigma_con];
        if l.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) || !l.iter().any(|x| *x > 0.0) {
            return Err(Error::invalid("reward weights must be ≥ 0 with at least one > 0"));
        }
        if s.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
            return Err(Error::invalid("reward kernel scales must be > 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Contact {
    Scalar(f64),
    /// Per-contact force vectors, reduced by the sum of their norms.
    PerPoint(Vec<[f64; 3]>),
}

impl Contact {
    pub fn magnitude(&self) -> Result<f64> {
        match self {
            Contact::Scalar(c) if *c < 0.0 || !c.is_finite() => {
                Err(Error::invalid(format!("contact force must be non-negative, got {c}")))
            }
            Contact::Scalar(c) => Ok(*c),
            Contact::PerPoint(v) => Ok(v.iter().map(|f| (f[0] * f[0] + f[1] * f[1] + f[2] * f[2]).sqrt()).sum()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RewardState {
    /// Flattened hand pose (e.g. keypoints).
    pub h: Vec<f64>,
    pub p: Pose,
    pub h_dot: Vec<f64>,
    /// Object twist (linear, angular).
    pub p_dot: [f64; 6],
    pub contact: Contact,
}

fn l2(a: &[f64], b: &[f64], what: &str) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!("{what} dimension {} vs {}", a.len(), b.len())));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

pub fn tracking_kernel(x: f64, sigma: f64) -> f64 {
    (-x / sigma).exp()
}

pub fn contact_kernel(c: f64, sigma: f64) -> f64 {
    1.0 - (-c / sigma).exp()
}

/// Object pose error: translation (m) plus geodesic angle (rad).
pub fn pose_error(a: &Pose, b: &Pose) -> f64 {
    let (dt, dr) = pose_geodesic(a, b);
    dt + dr
}

pub fn reward_step(state: &RewardState, target: &RewardState, spec: &RewardSpec) -> Result<f64> {
    spec.validate()?;
    let c = state.contact.magnitude()?;
    let geo = l2(&state.h, &target.h, "hand pose")? + pose_error(&state.p, &target.p);
    let dyn_ = l2(&state.h_dot, &target.h_dot, "hand velocity")? + l2(&state.p_dot, &target.p_dot, "object twist")?;
    Ok(spec.lambda_geo * tracking_kernel(geo, spec.sigma_geo)
        + spec.lambda_dyn * tracking_kernel(dyn_, spec.sigma_dyn)
        + spec.lambda_con * contact_kernel(c, spec.sigma_con))
}
