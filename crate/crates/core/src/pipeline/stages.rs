use std::collections::BTreeMap;

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::augment::{
    augment_trajectory, bind_substitute, mirror_trajectory, rank_substitutes, sample_augment_spec,
    segment_trajectory, MirrorOutcome, MirrorSpec, ObjectAsset, Segment, SegmentState,
};
use crate::canonical::{
    apply_canonical, build_canonical_frame, estimate_approach, first_salient_frame, lift_to_world, BodyAnchors,
    CanonicalTransform,
};
use crate::error::Result;
use crate::geom::{Pose, Vec3};
use crate::io::{Clip, PoseRecord};
use crate::kinematics::{replay_trajectory, JointConfig, ReplayReport};
use crate::metrics::MetricReport;
use crate::plausibility::{
    build_tsdf, min_depth, resolve_penetration, HandSurface, TsdfGrid, TsdfParams,
};
use crate::retarget::{retarget_trajectory, GestureClass, GestureClassifier, HandFrame, Keypoint, RetargetConfig};
use crate::trajectory::GripperTrajectory;

use super::config::{PalmSignMode, PenetrationMode, PipelineConfig, Robot};

/// Hand and object streams expressed in the canonical frame.
#[derive(Clone, Debug)]
pub struct CanonicalClip {
    pub hand: Vec<HandFrame>,
    pub object: Option<Vec<Pose>>,
    pub transform: CanonicalTransform,
}

pub fn canonicalize_clip(clip: &Clip, cfg: &PipelineConfig) -> Result<CanonicalClip> {
    let c2w = &clip.cam_to_world;
    let hand_w: Vec<HandFrame> = clip.hand.iter().map(|f| f.transformed(c2w)).collect();
    let obj_w = clip.object.as_ref().map(|o| lift_to_world(c2w, o));
    let wrists: Vec<Vec3> = hand_w.iter().map(|f| f.kp(Keypoint::Wrist)).collect();
    let up = Vec3::from(cfg.canonical.up);
    let (t0, origin, approach) = match &obj_w {
        Some(o) => {
            let centers: Vec<Vec3> = o.iter().map(|p| p.trans).collect();
            let t0 = first_salient_frame(&wrists, &centers, cfg.canonical.salient_distance).unwrap_or(0);
            (t0, centers[t0], estimate_approach(&wrists, &centers))
        }
        None => (0, wrists[0], None),
    };
    let anchors = clip.anchors.unwrap_or_else(|| {
        BodyAnchors::from_directions(up, approach.unwrap_or_else(|| Vec3::from(cfg.canonical.fallback_approach)))
    });
    let transform = build_canonical_frame(&anchors, &origin, t0)?;
    let w = transform.world_to_canonical;
    Ok(CanonicalClip {
        hand: hand_w.iter().map(|f| f.transformed(&w)).collect(),
        object: obj_w.map(|o| apply_canonical(&transform, &o)),
        transform,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PenetrationReport {
    pub checked: bool,
    /// Frames deeper than the tolerance before any correction.
    pub penetrating_frames: Vec<usize>,
    /// Most negative signed distance seen (m).
    pub max_depth: f64,
    pub resolved_frames: Vec<usize>,
    pub unresolved_frames: Vec<usize>,
    /// Largest wrist correction applied (m, rad).
    pub max_correction: (f64, f64),
}

const PALM: [Keypoint; 6] = [
    Keypoint::Wrist,
    Keypoint::ThumbCmc,
    Keypoint::IndexMcp,
    Keypoint::MiddleMcp,
    Keypoint::RingMcp,
    Keypoint::PinkyMcp,
];

pub fn object_grid(clip: &Clip, cfg: &PipelineConfig) -> Result<Option<TsdfGrid>> {
    match (&clip.mesh, cfg.penetration.mode) {
        (Some(mesh), m) if m != PenetrationMode::Off => Ok(Some(build_tsdf(mesh, &TsdfParams::from_voxel(cfg.penetration.voxel))?)),
        _ => Ok(None),
    }
}

/// Checks every frame against the object field and, in resolve mode, moves
/// the wrist rigidly out of the object.
pub fn check_penetration(
    hand: &mut [HandFrame],
    object: &[Pose],
    grid: &TsdfGrid,
    cfg: &PipelineConfig,
) -> PenetrationReport {
    let opts = &cfg.penetration.resolve;
    let mut rep = PenetrationReport {
        checked: true,
        ..Default::default()
    };
    let palm: Vec<usize> = PALM.iter().map(|k| *k as usize).collect();
    for (t, (frame, obj)) in hand.iter_mut().zip(object).enumerate() {
        let inv = obj.inverse();
        let wrist = frame.kp(Keypoint::Wrist);
        // Wrist-centred points in object-aligned axes.
        let local: Vec<Vec3> = frame.keypoints.iter().map(|p| inv.rot * (p - wrist)).collect();
        let surface = HandSurface::new(local, palm.clone()).expect("palm indices valid");
        let start = Pose::from_translation(inv.transform_point(&wrist));
        let depth = min_depth(&surface.transformed(&start), opts.subset, grid);
        rep.max_depth = rep.max_depth.min(depth);
        if depth >= -cfg.penetration.depth_tolerance {
            continue;
        }
        rep.penetrating_frames.push(t);
        if cfg.penetration.mode != PenetrationMode::Resolve {
            continue;
        }
        let r = resolve_penetration(&start, &surface, grid, opts);
        if r.converged {
            rep.resolved_frames.push(t);
        } else {
            rep.unresolved_frames.push(t);
        }
        rep.max_correction.0 = rep.max_correction.0.max(r.displacement.0);
        rep.max_correction.1 = rep.max_correction.1.max(r.displacement.1);
        let corrected = surface.transformed(&r.pose);
        for (kp, p) in frame.keypoints.iter_mut().zip(&corrected.points) {
            *kp = obj.transform_point(p);
        }
        frame.wrist_pose = Pose::new(obj.rot * r.pose.rot * inv.rot * frame.wrist_pose.rot, frame.keypoints[0]);
    }
    if rep.max_depth > 0.0 {
        rep.max_depth = 0.0;
    }
    rep
}

pub struct Retargeted {
    pub trajectory: GripperTrajectory,
    pub gesture: GestureClass,
    pub warnings: Vec<String>,
}

pub fn retarget_clip(
    clip: &Clip,
    canon: &CanonicalClip,
    classifier: Option<&GestureClassifier>,
    cfg: &PipelineConfig,
) -> Result<Retargeted> {
    let rc = RetargetConfig {
        d_z: cfg.retarget.d_z,
        palm_sign: crate::retarget::PalmSign::Handedness,
        gesture: cfg.retarget.gesture,
        gripper_state: cfg.retarget.gripper_state,
        fps: clip.fps,
    };
    let centroids: Option<Vec<Vec3>> = match cfg.retarget.palm_sign {
        PalmSignMode::Object => canon.object.as_ref().map(|o| o.iter().map(|p| p.trans).collect()),
        PalmSignMode::Handedness => None,
    };
    let out = retarget_trajectory(&canon.hand, clip.track.as_ref(), classifier, centroids.as_deref(), &rc)?;
    Ok(Retargeted {
        trajectory: out.trajectory,
        gesture: out.gesture,
        warnings: out.warnings,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Augmentation {
    None,
    ObjectTransform {
        seed: u64,
        object_transform: PoseRecord,
        open_anchors: Vec<Option<([f64; 3], [f64; 3])>>,
    },
    Mirror {
        tau_screw: f64,
    },
    Substitute {
        asset: String,
        score: f64,
        scale: f64,
        rotation: [f64; 4],
        pca_fallback: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lineage {
    pub clip: String,
    pub episode: String,
    pub parent: Option<String>,
    pub seed: u64,
    pub augmentation: Augmentation,
}

#[derive(Clone, Debug)]
pub struct Episode {
    pub id: String,
    pub trajectory: GripperTrajectory,
    pub object: Option<Vec<Pose>>,
    pub lineage: Lineage,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AugmentFailure {
    pub episode: String,
    pub reason: String,
}

/// Stable 64-bit mix of the run seed, clip id and augmentation index.
pub fn derive_seed(seed: u64, clip: &str, index: u64) -> u64 {
    // FNV-1a over the clip id, then a splitmix finalizer.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in clip.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn vec3_arr(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

/// The base episode plus every configured augmentation of it.
pub fn build_episodes(
    clip_id: &str,
    base: &GripperTrajectory,
    object: Option<&[Pose]>,
    mesh_asset: Option<&ObjectAsset>,
    library: &[ObjectAsset],
    cfg: &PipelineConfig,
    seed: u64,
) -> (Vec<Episode>, Vec<AugmentFailure>) {
    let lineage = |episode: &str, parent: Option<&str>, seed: u64, augmentation: Augmentation| Lineage {
        clip: clip_id.into(),
        episode: episode.into(),
        parent: parent.map(Into::into),
        seed,
        augmentation,
    };
    let mut eps = vec![Episode {
        id: "base".into(),
        trajectory: base.clone(),
        object: object.map(<[Pose]>::to_vec),
        lineage: lineage("base", None, seed, Augmentation::None),
    }];
    let mut failures = Vec::new();
    let a = &cfg.augment;
    for k in 0..a.transforms {
        let id = format!("aug{k}");
        let s = derive_seed(seed, clip_id, k as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let spec = sample_augment_spec(base, &a.sampling, &mut rng);
        match augment_trajectory(base, &spec) {
            Ok(traj) => {
                let t_o = spec.object_transform;
                eps.push(Episode {
                    trajectory: traj,
                    object: object.map(|o| o.iter().map(|p| t_o.compose(p)).collect()),
                    lineage: lineage(
                        &id,
                        Some("base"),
                        s,
                        Augmentation::ObjectTransform {
                            seed: s,
                            object_transform: PoseRecord::from(&t_o),
                            open_anchors: spec
                                .open_anchors
                                .iter()
                                .map(|x| x.map(|(p, q)| (vec3_arr(&p), vec3_arr(&q))))
                                .collect(),
                        },
                    ),
                    id,
                });
            }
            Err(e) => failures.push(AugmentFailure {
                episode: id,
                reason: e.to_string(),
            }),
        }
    }
    if a.mirror {
        let identity;
        let obj = match object {
            Some(o) => o,
            None => {
                identity = vec![Pose::identity(); base.len()];
                &identity
            }
        };
        let spec = MirrorSpec { tau_screw: a.tau_screw };
        match mirror_trajectory(base, obj, &spec, &Vec3::from(a.task_axis)) {
            Ok(MirrorOutcome::Mirrored { hand, object: mo }) => eps.push(Episode {
                id: "mirror".into(),
                trajectory: hand,
                object: object.map(|_| mo),
                lineage: lineage("mirror", Some("base"), seed, Augmentation::Mirror { tau_screw: a.tau_screw }),
            }),
            Ok(MirrorOutcome::Rejected { segment, screw }) => failures.push(AugmentFailure {
                episode: "mirror".into(),
                reason: format!(
                    "rejected: screw {screw:.4} rad over hold [{}, {}] exceeds {}",
                    segment.start, segment.end, a.tau_screw
                ),
            }),
            Err(e) => failures.push(AugmentFailure {
                episode: "mirror".into(),
                reason: e.to_string(),
            }),
        }
    }
    if a.substitutes > 0 && !library.is_empty() {
        match mesh_asset {
            None => failures.push(AugmentFailure {
                episode: "substitute".into(),
                reason: "clip has no mesh to retrieve against".into(),
            }),
            Some(src) => match rank_substitutes(src, library, &a.similarity, a.substitutes) {
                Err(e) => failures.push(AugmentFailure {
                    episode: "substitute".into(),
                    reason: e.to_string(),
                }),
                Ok(ranked) => {
                    for (asset_id, score) in ranked {
                        let id = format!("sub_{asset_id}");
                        let cand = library.iter().find(|x| x.id == asset_id).expect("ranked from library");
                        match bind_substitute(object.unwrap_or(&[]), src, cand) {
                            Ok(b) => eps.push(Episode {
                                trajectory: base.clone(),
                                object: object.map(<[Pose]>::to_vec),
                                lineage: lineage(
                                    &id,
                                    Some("base"),
                                    seed,
                                    Augmentation::Substitute {
                                        asset: asset_id,
                                        score: score.total,
                                        scale: b.scale,
                                        rotation: b.rotation.to_quaternion_wxyz(),
                                        pca_fallback: b.pca_fallback,
                                    },
                                ),
                                id,
                            }),
                            Err(e) => failures.push(AugmentFailure {
                                episode: id,
                                reason: e.to_string(),
                            }),
                        }
                    }
                }
            },
        }
    }
    (eps, failures)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RobotReplay {
    pub report: ReplayReport,
    pub error: Option<String>,
    #[serde(skip)]
    pub configs: Vec<JointConfig>,
}

/// Replays the trajectory on `robot`; a failed first frame is reported, not raised.
pub fn replay_on(robot: &Robot, traj: &GripperTrajectory, cfg: &PipelineConfig) -> RobotReplay {
    let inv = robot.base.inverse();
    let targets: Vec<Pose> = traj.frames.iter().map(|f| inv.compose(&f.pose)).collect();
    match replay_trajectory(&robot.chain, &targets, &robot.home, &cfg.ik, &robot.collisions) {
        Ok(r) => RobotReplay {
            report: r.report,
            error: None,
            configs: r.configs,
        },
        Err(e) => {
            warn!("replay on {} failed: {e}", robot.name);
            RobotReplay {
                report: ReplayReport {
                    robot: robot.name.clone(),
                    frames_requested: targets.len(),
                    failed_frame: Some(0),
                    ..Default::default()
                },
                error: Some(e.to_string()),
                configs: Vec::new(),
            }
        }
    }
}

/// Trajectory metrics: end-effector jitter and, over hold frames, the
/// spread of the gripper–object relative pose.
pub fn episode_metrics(traj: &GripperTrajectory, object: Option<&[Pose]>, segments: &[Segment]) -> Result<MetricReport> {
    let positions: Vec<Vec3> = traj.frames.iter().map(|f| f.pose.trans).collect();
    let (hold_h, hold_o): (Vec<Pose>, Vec<Pose>) = match object {
        Some(o) => segments
            .iter()
            .filter(|s| s.state == SegmentState::Hold)
            .flat_map(|s| s.range())
            .map(|t| (traj.frames[t].pose, o[t]))
            .unzip(),
        None => (Vec::new(), Vec::new()),
    };
    MetricReport::compute(&positions, Some(&hold_h), Some(&hold_o), None, traj.fps)
}

#[derive(Clone, Debug, Serialize)]
pub struct EpisodeReport {
    pub clip: String,
    pub episode: String,
    pub gesture: GestureClass,
    pub frames: usize,
    pub segments: Vec<Segment>,
    pub penetration: PenetrationReport,
    pub replay: BTreeMap<String, RobotReplay>,
    pub metrics: MetricReport,
    pub warnings: Vec<String>,
}

pub(crate) fn object_asset(clip: &Clip) -> Option<ObjectAsset> {
    clip.mesh.as_ref().map(|m| ObjectAsset {
        id: clip.id.clone(),
        mesh: m.clone(),
        canonical_pose: Pose::identity(),
        category: String::new(),
        embedding: None,
    })
}

pub(crate) fn segments_of(traj: &GripperTrajectory) -> Vec<Segment> {
    segment_trajectory(traj)
}
