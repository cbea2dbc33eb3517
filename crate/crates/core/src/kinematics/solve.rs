//! Forward kinematics, damped least-squares IK and seeded trajectory replay.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::chain::{JointConfig, JointKind, KinematicChain};
use crate::error::{Error, Result};
use crate::geom::{so3_log, Pose, Vec3};

/// Forward kinematics without limit checks.
pub fn fk_unchecked(chain: &KinematicChain, q: &[f64]) -> Pose {
    chain
        .joints
        .iter()
        .zip(q)
        .fold(Pose::identity(), |acc, (j, v)| acc.compose(&j.transform(*v)))
        .compose(&chain.ee_offset)
}

/// End-effector pose at `q`; errors if `q` violates the joint limits.
pub fn fk(chain: &KinematicChain, q: &JointConfig) -> Result<Pose> {
    chain.check_limits(q)?;
    Ok(fk_unchecked(chain, q.as_slice()))
}

/// World-frame geometric Jacobian (rows: linear xyz, angular xyz) and the EE pose.
pub fn jacobian(chain: &KinematicChain, q: &[f64]) -> (DMatrix<f64>, Pose) {
    let n = chain.dof();
    let mut frames = Vec::with_capacity(n);
    let mut acc = Pose::identity();
    for (j, v) in chain.joints.iter().zip(q) {
        let before_motion = acc.compose(&j.origin);
        frames.push(before_motion);
        acc = acc.compose(&j.transform(*v));
    }
    let ee = acc.compose(&chain.ee_offset);
    let mut jac = DMatrix::zeros(6, n);
    for (i, (j, f)) in chain.joints.iter().zip(&frames).enumerate() {
        let axis = f.rot * j.axis;
        let (lin, ang) = match j.kind {
            JointKind::Revolute => (axis.cross(&(ee.trans - f.trans)), axis),
            JointKind::Prismatic => (axis, Vec3::zeros()),
            JointKind::Fixed => (Vec3::zeros(), Vec3::zeros()),
        };
        jac.fixed_view_mut::<3, 1>(0, i).copy_from(&lin);
        jac.fixed_view_mut::<3, 1>(3, i).copy_from(&ang);
    }
    (jac, ee)
}

/// Translation error and world-frame rotation error (axis-angle) of `current`
/// relative to `target`.
pub fn pose_error(current: &Pose, target: &Pose) -> (Vec3, Vec3) {
    (
        target.trans - current.trans,
        so3_log(&(target.rot * current.rot.inverse())),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IkOptions {
    pub max_iterations: usize,
    pub damping: f64,
    pub position_tolerance: f64,
    pub rotation_tolerance: f64,
    /// Meters of error per radian of rotation error; 0 solves position only.
    pub rotation_weight: f64,
    /// Largest change of any joint within one iteration.
    pub max_iteration_step: f64,
    /// Replay rate caps between consecutive frames.
    pub rate_cap_revolute: f64,
    pub rate_cap_prismatic: f64,
}

impl Default for IkOptions {
    fn default() -> Self {
        IkOptions {
            max_iterations: 200,
            damping: 0.05,
            position_tolerance: 1e-4,
            rotation_tolerance: 1e-3,
            rotation_weight: 0.5,
            max_iteration_step: 0.2,
            rate_cap_revolute: 0.2,
            rate_cap_prismatic: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IkSolution {
    pub q: JointConfig,
    pub iterations: usize,
    pub position_residual: f64,
    pub rotation_residual: f64,
}

/// Best effort returned when the solver does not converge.
#[derive(Clone, Debug, PartialEq)]
pub struct IkFailure {
    pub best: JointConfig,
    pub iterations: usize,
    pub position_residual: f64,
    pub rotation_residual: f64,
}

fn converged(opts: &IkOptions, pos: f64, rot: f64) -> bool {
    pos <= opts.position_tolerance && (opts.rotation_weight == 0.0 || rot <= opts.rotation_tolerance)
}

fn weighted_error(opts: &IkOptions, pos: &Vec3, rot: &Vec3) -> f64 {
    (pos.norm_squared() + (rot * opts.rotation_weight).norm_squared()).sqrt()
}

/// Seeded, joint-limited damped least-squares IK.
pub fn ik_solve(chain: &KinematicChain, target: &Pose, seed: &JointConfig, opts: &IkOptions) -> Result<IkSolution> {
    chain.check_limits(seed)?;
    let n = chain.dof();
    let mut q = seed.clone();
    let w = opts.rotation_weight;
    let lambda2 = opts.damping * opts.damping;

    let (_, ee) = jacobian(chain, q.as_slice());
    let (mut e_pos, mut e_rot) = pose_error(&ee, target);
    let mut best = (q.clone(), e_pos.norm(), e_rot.norm(), weighted_error(opts, &e_pos, &e_rot));

    for iter in 0..opts.max_iterations {
        if converged(opts, e_pos.norm(), e_rot.norm()) {
            return Ok(IkSolution {
                q,
                iterations: iter,
                position_residual: e_pos.norm(),
                rotation_residual: e_rot.norm(),
            });
        }
        let (mut jac, _) = jacobian(chain, q.as_slice());
        let mut err = DVector::zeros(6);
        err.fixed_rows_mut::<3>(0).copy_from(&e_pos);
        err.fixed_rows_mut::<3>(3).copy_from(&(e_rot * w));
        for c in 0..n {
            for r in 3..6 {
                jac[(r, c)] *= w;
            }
        }
        // dq = Jᵀ (J Jᵀ + λ² I)⁻¹ e
        let jjt = &jac * jac.transpose() + DMatrix::identity(6, 6) * lambda2;
        let Some(chol) = jjt.cholesky() else {
            break;
        };
        let mut dq = jac.transpose() * chol.solve(&err);
        let biggest = dq.amax();
        if biggest > opts.max_iteration_step {
            dq *= opts.max_iteration_step / biggest;
        }
        for (v, d) in q.0.iter_mut().zip(dq.iter()) {
            *v += d;
        }
        chain.clamp(&mut q);

        let (_, ee) = jacobian(chain, q.as_slice());
        (e_pos, e_rot) = pose_error(&ee, target);
        let werr = weighted_error(opts, &e_pos, &e_rot);
        if werr < best.3 {
            best = (q.clone(), e_pos.norm(), e_rot.norm(), werr);
        }
    }
    if converged(opts, e_pos.norm(), e_rot.norm()) {
        return Ok(IkSolution {
            q,
            iterations: opts.max_iterations,
            position_residual: e_pos.norm(),
            rotation_residual: e_rot.norm(),
        });
    }
    Err(Error::IkNonConvergence(Box::new(IkFailure {
        best: best.0,
        iterations: opts.max_iterations,
        position_residual: best.1,
        rotation_residual: best.2,
    })))
}

/// A sphere rigidly attached to the frame after movable joint `link`
/// (`None` = chain root).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkSphere {
    pub link: Option<usize>,
    pub center: [f64; 3],
    pub radius: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkCapsule {
    pub link: Option<usize>,
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub radius: f64,
}

/// Optional sphere-vs-capsule self-collision checks.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CollisionModel {
    pub spheres: Vec<LinkSphere>,
    pub capsules: Vec<LinkCapsule>,
    /// `(sphere index, capsule index)` pairs to check.
    pub pairs: Vec<(usize, usize)>,
}

fn link_frames(chain: &KinematicChain, q: &[f64]) -> Vec<Pose> {
    let mut out = Vec::with_capacity(chain.dof());
    let mut acc = Pose::identity();
    for (j, v) in chain.joints.iter().zip(q) {
        acc = acc.compose(&j.transform(*v));
        out.push(acc);
    }
    out
}

fn point_segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let s = if len2 > 0.0 { ((p - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p - (a + ab * s)).norm()
}

impl CollisionModel {
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Pairs in contact at `q`.
    pub fn colliding_pairs(&self, chain: &KinematicChain, q: &[f64]) -> Vec<(usize, usize)> {
        if self.pairs.is_empty() {
            return Vec::new();
        }
        let frames = link_frames(chain, q);
        let frame = |link: Option<usize>| link.and_then(|l| frames.get(l).copied()).unwrap_or_default();
        self.pairs
            .iter()
            .copied()
            .filter(|&(si, ci)| {
                let (Some(s), Some(c)) = (self.spheres.get(si), self.capsules.get(ci)) else {
                    return false;
                };
                let fs = frame(s.link);
                let fc = frame(c.link);
                let center = fs.transform_point(&Vec3::from(s.center));
                let a = fc.transform_point(&Vec3::from(c.a));
                let b = fc.transform_point(&Vec3::from(c.b));
                point_segment_distance(&center, &a, &b) < s.radius + c.radius
            })
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub robot: String,
    pub frames_requested: usize,
    pub frames_solved: usize,
    pub position_residuals: Vec<f64>,
    pub rotation_residuals: Vec<f64>,
    /// Joints sitting on a limit, per frame.
    pub limit_saturations: Vec<usize>,
    /// Largest single-joint change between consecutive solved frames.
    pub max_joint_step: f64,
    /// Frames whose step from the previous frame exceeds the rate cap.
    pub rate_violations: Vec<usize>,
    pub collision_frames: Vec<usize>,
    pub failed_frame: Option<usize>,
    pub feasible: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Replay {
    pub configs: Vec<JointConfig>,
    pub report: ReplayReport,
}

/// Solves IK frame by frame, seeding each frame with the previous solution.
pub fn replay_trajectory(
    chain: &KinematicChain,
    targets: &[Pose],
    q0: &JointConfig,
    opts: &IkOptions,
    collisions: &CollisionModel,
) -> Result<Replay> {
    chain.check_limits(q0)?;
    let mut report = ReplayReport {
        robot: chain.name.clone(),
        frames_requested: targets.len(),
        ..Default::default()
    };
    let mut configs: Vec<JointConfig> = Vec::with_capacity(targets.len());
    let mut seed = q0.clone();
    for (t, target) in targets.iter().enumerate() {
        let sol = match ik_solve(chain, target, &seed, opts) {
            Ok(s) => s,
            Err(e) if t == 0 => return Err(e),
            Err(Error::IkNonConvergence(f)) => {
                report.failed_frame = Some(t);
                report.position_residuals.push(f.position_residual);
                report.rotation_residuals.push(f.rotation_residual);
                break;
            }
            Err(e) => return Err(e),
        };
        if let Some(prev) = configs.last() {
            let mut violated = false;
            for ((a, b), j) in sol.q.0.iter().zip(&prev.0).zip(&chain.joints) {
                let step = (a - b).abs();
                report.max_joint_step = report.max_joint_step.max(step);
                let cap = match j.kind {
                    JointKind::Prismatic => opts.rate_cap_prismatic,
                    _ => opts.rate_cap_revolute,
                };
                violated |= step > cap;
            }
            if violated {
                report.rate_violations.push(t);
            }
        }
        report.limit_saturations.push(
            sol.q
                .0
                .iter()
                .zip(&chain.joints)
                .filter(|(v, j)| **v <= j.lower || **v >= j.upper)
                .count(),
        );
        if !collisions.colliding_pairs(chain, sol.q.as_slice()).is_empty() {
            report.collision_frames.push(t);
        }
        report.position_residuals.push(sol.position_residual);
        report.rotation_residuals.push(sol.rotation_residual);
        seed = sol.q.clone();
        configs.push(sol.q);
    }
    report.frames_solved = configs.len();
    report.feasible = report.failed_frame.is_none()
        && report.rate_violations.is_empty()
        && report.collision_frames.is_empty();
    Ok(Replay { configs, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Rot3;
    use crate::kinematics::chain::{parse_chain, parse_chain_path, Joint};
    use crate::kinematics::fixtures::{planar_2r, six_dof_arm, SIX_DOF_URDF};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn zero_config_is_product_of_fixed_transforms() {
        let c = planar_2r();
        let p = fk(&c, &JointConfig::zeros(2)).unwrap();
        assert_abs_diff_eq!(p.trans, Vec3::new(2.0, 0.0, 0.0), epsilon = 1e-15);
        assert_eq!(p.rot, Rot3::identity());
    }

    #[test]
    fn planar_two_link_elbow_up() {
        let c = planar_2r();
        let p = fk(&c, &JointConfig(vec![0.0, FRAC_PI_2])).unwrap();
        assert_abs_diff_eq!(p.trans, Vec3::new(1.0, 1.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(p.rot.angle_to(&Rot3::rot_z(FRAC_PI_2)), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn prismatic_translation() {
        let c = KinematicChain::from_joints(
            "slider",
            &[Joint::prismatic("z", Pose::identity(), Vec3::z(), 0.0, 1.0)],
        )
        .unwrap();
        let p = fk(&c, &JointConfig(vec![0.3])).unwrap();
        assert_eq!(p.trans, Vec3::new(0.0, 0.0, 0.3));
        assert!(fk(&c, &JointConfig(vec![1.3])).is_err());
    }

    #[test]
    fn folded_fixed_joint_matches_unfolded_composition() {
        let doc = r#"<robot name="f">
  <link name="a"/><link name="b"/><link name="c"/><link name="d"/>
  <joint name="j1" type="revolute"><parent link="a"/><child link="b"/>
    <origin xyz="0 0 0.2"/><axis xyz="0 0 1"/><limit lower="-3" upper="3"/></joint>
  <joint name="mount" type="fixed"><parent link="b"/><child link="c"/>
    <origin xyz="0.3 0 0" rpy="0.2 0.1 0.4"/></joint>
  <joint name="j2" type="revolute"><parent link="c"/><child link="d"/>
    <origin xyz="0 0.1 0"/><axis xyz="0 1 0"/><limit lower="-3" upper="3"/></joint>
</robot>"#;
        let chain = parse_chain(doc, "a", "d").unwrap();
        assert_eq!(chain.dof(), 2);
        let (_, path, _) = parse_chain_path(doc, "a", "d").unwrap();
        let q = [0.7, -1.1];
        // Unfolded oracle: walk every joint including the fixed one.
        let mut it = q.iter();
        let unfolded = path.iter().fold(Pose::identity(), |acc, j| {
            let v = if j.is_movable() { *it.next().unwrap() } else { 0.0 };
            acc.compose(&j.transform(v))
        });
        let folded = fk(&chain, &JointConfig(q.to_vec())).unwrap();
        assert!((folded.trans - unfolded.trans).norm() < 1e-12);
        assert!((folded.rot.matrix() - unfolded.rot.matrix()).abs().max() < 1e-12);
    }

    #[test]
    fn ik_returns_seed_when_already_at_target() {
        let c = six_dof_arm();
        let seed = JointConfig(vec![0.1, -0.4, 0.8, 0.2, 0.5, -0.3]);
        let target = fk(&c, &seed).unwrap();
        let sol = ik_solve(&c, &target, &seed, &IkOptions::default()).unwrap();
        assert_eq!(sol.iterations, 0);
        assert_eq!(sol.q, seed);
    }

    #[test]
    fn ik_two_link_matches_closed_form() {
        let c = planar_2r();
        let target = Pose::new(Rot3::rot_z(FRAC_PI_2), Vec3::new(1.0, 1.0, 0.0));
        let sol = ik_solve(&c, &target, &JointConfig(vec![0.3, 1.0]), &IkOptions::default()).unwrap();
        let p = fk(&c, &sol.q).unwrap();
        assert!((p.trans - target.trans).norm() < 1e-4);
        // Closed-form planar IK: cos q2 = (x²+y²−2)/2, elbow sign picked by the seed.
        let (x, y) = (1.0f64, 1.0f64);
        let q2 = ((x * x + y * y - 2.0) / 2.0).acos();
        let q1 = y.atan2(x) - (q2.sin()).atan2(1.0 + q2.cos());
        assert!((sol.q.0[0] - q1).abs() < 1e-3 && (sol.q.0[1] - q2).abs() < 1e-3, "{:?}", sol.q);
    }

    #[test]
    fn ik_unreachable_reports_residual() {
        let c = planar_2r();
        let target = Pose::from_translation(Vec3::new(3.0, 0.0, 0.0));
        let opts = IkOptions { rotation_weight: 0.0, ..Default::default() };
        match ik_solve(&c, &target, &JointConfig(vec![0.2, 0.2]), &opts) {
            Err(Error::IkNonConvergence(f)) => {
                assert!((f.position_residual - 1.0).abs() < 5e-3, "{}", f.position_residual);
                c.check_limits(&f.best).unwrap();
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn replay_constant_target() {
        let c = six_dof_arm();
        let q_star = JointConfig(vec![0.2, -0.3, 0.9, 0.1, 0.6, 0.2]);
        let target = fk(&c, &q_star).unwrap();
        let seed = JointConfig(vec![0.15, -0.25, 0.85, 0.1, 0.55, 0.25]);
        let r = replay_trajectory(&c, &vec![target; 10], &seed, &IkOptions::default(), &CollisionModel::default()).unwrap();
        assert_eq!(r.configs.len(), 10);
        assert!(r.report.feasible);
        for q in &r.configs[1..] {
            assert_eq!(q, &r.configs[0]);
        }
    }

    #[test]
    fn replay_flags_teleport() {
        let c = six_dof_arm();
        let q_a = JointConfig(vec![0.0, -0.3, 0.9, 0.0, 0.6, 0.0]);
        let q_b = JointConfig(vec![1.0, -0.3, 0.9, 0.0, 0.6, 0.0]);
        let targets = vec![fk(&c, &q_a).unwrap(), fk(&c, &q_a).unwrap(), fk(&c, &q_b).unwrap()];
        let r = replay_trajectory(&c, &targets, &q_a, &IkOptions::default(), &CollisionModel::default()).unwrap();
        assert!(!r.report.feasible);
        assert_eq!(r.report.rate_violations, vec![2]);
        assert!(r.report.max_joint_step > 0.2);
    }

    #[test]
    fn replay_truncates_on_mid_failure() {
        let c = planar_2r();
        let targets = vec![
            Pose::new(Rot3::rot_z(FRAC_PI_2), Vec3::new(1.0, 1.0, 0.0)),
            Pose::from_translation(Vec3::new(5.0, 0.0, 0.0)),
            Pose::new(Rot3::rot_z(FRAC_PI_2), Vec3::new(1.0, 1.0, 0.0)),
        ];
        let r = replay_trajectory(&c, &targets, &JointConfig(vec![0.3, 1.2]), &IkOptions::default(), &CollisionModel::default()).unwrap();
        assert_eq!(r.configs.len(), 1);
        assert_eq!(r.report.failed_frame, Some(1));
        assert!(!r.report.feasible);
        // First-frame failure is an error.
        assert!(replay_trajectory(&c, &targets[1..], &JointConfig(vec![0.3, 1.2]), &IkOptions::default(), &CollisionModel::default()).is_err());
    }

    #[test]
    fn sphere_capsule_collision() {
        let c = planar_2r();
        let model = CollisionModel {
            spheres: vec![LinkSphere { link: Some(1), center: [1.0, 0.0, 0.0], radius: 0.1 }],
            capsules: vec![LinkCapsule { link: None, a: [0.0, 0.0, 0.0], b: [0.0, 1.0, 0.0], radius: 0.05 }],
            pairs: vec![(0, 0)],
        };
        // Folded back so the tip lands near the root link capsule.
        assert_eq!(model.colliding_pairs(&c, &[0.0, 2.9]).len(), 1);
        assert!(model.colliding_pairs(&c, &[0.0, 0.0]).is_empty());
    }

    #[test]
    fn urdf_six_dof_parses() {
        let c = parse_chain(SIX_DOF_URDF, "base_link", "tool0").unwrap();
        assert_eq!(c.dof(), 6);
        assert_eq!(c, six_dof_arm());
    }

    proptest! {
        #[test]
        fn analytic_jacobian_matches_central_differences(q in prop::array::uniform6(-1.2f64..1.2)) {
            let c = six_dof_arm();
            let (jac, _) = jacobian(&c, &q);
            let h = 1e-6;
            for i in 0..6 {
                let mut qp = q;
                let mut qm = q;
                qp[i] += h;
                qm[i] -= h;
                let pp = fk_unchecked(&c, &qp);
                let pm = fk_unchecked(&c, &qm);
                let dv = (pp.trans - pm.trans) / (2.0 * h);
                let dw = so3_log(&(pp.rot * pm.rot.inverse())) / (2.0 * h);
                for r in 0..3 {
                    let scale = jac[(r, i)].abs().max(1e-2);
                    prop_assert!((jac[(r, i)] - dv[r]).abs() / scale < 1e-5);
                    let scale = jac[(r + 3, i)].abs().max(1e-2);
                    prop_assert!((jac[(r + 3, i)] - dw[r]).abs() / scale < 1e-5);
                }
            }
        }
    }
}
