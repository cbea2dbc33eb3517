//! End-to-end fixture generated from forward kinematics of the `arm6` chain.
//!
//! A joint path `q(t)` gives gripper poses `T_g(t) = B · fk(q(t))`. The hand
//! is placed so that whole-hand retargeting recovers `T_g` exactly, the object
//! rides rigidly with the gripper while held, and the keypoint track follows
//! object corners so the gripper-state detector sees the grasp.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use crate::canonical::BodyAnchors;
use crate::error::Result;
use crate::geom::{Pose, Rot3, Vec3};
use crate::io::{write_hand_stream, write_pose_stream, write_track, ClipManifest, ExemplarFile, ExemplarRecord, HandRecord, PoseRecord, SCHEMA_VERSION};
use crate::kinematics::{fixtures::six_dof_arm, fk, JointConfig};
use crate::plausibility::TriMesh;
use crate::retarget::{gripper_pose_wholehand, GestureClass, HandFrame, KeypointTrack};
use crate::synth::{synthetic_hand, HandShape};
use crate::trajectory::{GripperCommand, Handedness};

pub const FRAMES: usize = 90;
pub const FPS: f64 = 30.0;
/// First and last frame the object moves with the gripper.
pub const GRASP: usize = 30;
pub const RELEASE: usize = 59;
/// Frames the arm rests after release.
const DWELL: usize = 9;

const K_START: [f64; 6] = [0.0, -0.3, 1.0, 0.0, 0.6, 0.0];
const K_GRASP: [f64; 6] = [0.2, 0.1, 1.1, 0.1, 0.5, 0.1];
const K_PLACE: [f64; 6] = [0.1, 0.0, 1.25, 0.05, 0.45, 0.05];
const K_END: [f64; 6] = [-0.2, -0.3, 1.0, 0.1, 0.6, 0.0];
/// Wrist roll added during the hold for the screw-heavy clip; it twists the
/// object about its own `z` axis.
pub const SCREW_SWEEP: f64 = 0.6;

/// Object frame relative to the gripper while held.
pub fn grasp_offset() -> Pose {
    Pose::from_translation(Vec3::new(0.0, 0.0, 0.06))
}

pub fn object_mesh() -> TriMesh {
    TriMesh::cuboid(Vec3::new(-0.025, -0.03, -0.02), Vec3::new(0.025, 0.03, 0.02))
}

pub fn cam_to_world() -> Pose {
    Pose::new(Rot3::from_rpy(-2.0, 0.1, 0.4), Vec3::new(0.2, -0.8, 0.6))
}

fn ease(a: &[f64; 6], b: &[f64; 6], s: f64) -> JointConfig {
    let w = 0.5 - 0.5 * (PI * s.clamp(0.0, 1.0)).cos();
    JointConfig((0..6).map(|i| a[i] + (b[i] - a[i]) * w).collect())
}

/// Joint path: approach, hold, rest, retreat.
pub fn joint_path(screw_heavy: bool) -> Vec<JointConfig> {
    let mut place = K_PLACE;
    if screw_heavy {
        place[5] = K_GRASP[5] + SCREW_SWEEP;
    }
    let rest = RELEASE + DWELL;
    (0..FRAMES)
        .map(|t| {
            if t <= GRASP {
                ease(&K_START, &K_GRASP, t as f64 / GRASP as f64)
            } else if t <= RELEASE {
                ease(&K_GRASP, &place, (t - GRASP) as f64 / (RELEASE - GRASP) as f64)
            } else if t <= rest {
                ease(&place, &place, 0.0)
            } else {
                ease(&place, &K_END, (t - rest) as f64 / (FRAMES - 1 - rest) as f64)
            }
        })
        .collect()
}

/// Robot base pose that puts the object's resting position at the origin.
pub fn robot_base() -> Pose {
    let chain = six_dof_arm();
    let g = fk(&chain, &ease(&K_START, &K_GRASP, 1.0)).expect("within limits");
    Pose::from_translation(-g.compose(&grasp_offset()).trans)
}

/// Intended commands: closed exactly while the object moves with the gripper.
pub fn intended_commands() -> Vec<GripperCommand> {
    (0..FRAMES)
        .map(|t| {
            if (GRASP..=RELEASE).contains(&t) {
                GripperCommand::Closed
            } else {
                GripperCommand::Open
            }
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct FixtureClip {
    pub id: String,
    pub q: Vec<JointConfig>,
    /// Gripper poses in the canonical (= world) frame.
    pub gripper: Vec<Pose>,
    pub object: Vec<Pose>,
    /// Hand keypoints in the world frame.
    pub hand: Vec<HandFrame>,
    /// Object corners in the camera frame.
    pub track: KeypointTrack,
}

pub fn fixture_clip(id: &str, screw_heavy: bool) -> FixtureClip {
    let chain = six_dof_arm();
    let base = robot_base();
    let q = joint_path(screw_heavy);
    let gripper: Vec<Pose> = q
        .iter()
        .map(|q| base.compose(&fk(&chain, q).expect("within limits")))
        .collect();
    let offset = grasp_offset();
    let object: Vec<Pose> = (0..FRAMES)
        .map(|t| gripper[t.clamp(GRASP, RELEASE)].compose(&offset))
        .collect();
    let local = synthetic_hand(HandShape::Flat { curl: 0.0 }, Handedness::Right);
    let g_local = gripper_pose_wholehand(&local, 0.0, 1.0).expect("synthetic hand is valid");
    let hand_from_gripper = g_local.inverse();
    let hand = gripper
        .iter()
        .map(|g| local.transformed(&g.compose(&hand_from_gripper)))
        .collect();
    let w2c = cam_to_world().inverse();
    let corners = object_mesh().vertices;
    let track = KeypointTrack::new(
        3,
        object
            .iter()
            .map(|o| {
                corners
                    .iter()
                    .map(|c| Some(w2c.compose(o).transform_point(c).into()))
                    .collect()
            })
            .collect(),
    )
    .expect("finite track");
    FixtureClip {
        id: id.into(),
        q,
        gripper,
        object,
        hand,
        track,
    }
}

pub const CLIP_IDS: [&str; 2] = ["pick_place", "screw_turn"];

pub fn fixture_clips() -> Vec<FixtureClip> {
    vec![fixture_clip(CLIP_IDS[0], false), fixture_clip(CLIP_IDS[1], true)]
}

/// Exemplars in the canonical frame of the fixture: whole-hand frames taken
/// from the clip, and pinch hands at the same wrist placements.
fn exemplar_file() -> ExemplarFile {
    let clip = fixture_clip(CLIP_IDS[0], false);
    let local = synthetic_hand(HandShape::Flat { curl: 0.0 }, Handedness::Right);
    let g_local = gripper_pose_wholehand(&local, 0.0, 1.0).expect("synthetic hand is valid");
    let mut exemplars = Vec::new();
    for (t, aperture) in [(0, 0.0), (45, 0.015), (89, 0.03)] {
        let place = clip.gripper[t].compose(&g_local.inverse());
        let pinch = synthetic_hand(HandShape::Pinch { aperture }, Handedness::Right).transformed(&place);
        exemplars.push(ExemplarRecord {
            label: GestureClass::WholeHand,
            joints: Some(HandRecord::from(&clip.hand[t]).joints),
            features: None,
        });
        exemplars.push(ExemplarRecord {
            label: GestureClass::FingerOnly,
            joints: Some(HandRecord::from(&pinch).joints),
            features: None,
        });
    }
    ExemplarFile {
        schema_version: SCHEMA_VERSION,
        k: 3,
        exemplars,
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
    format!("[{}]", parts.join(", "))
}

pub fn fixture_config() -> String {
    let base = PoseRecord::from(&robot_base());
    let home = &joint_path(false)[0];
    format!(
        "seed = 7\n\n\
         [retarget]\nexemplars = \"exemplars.json\"\n\n\
         [penetration]\nmode = \"flag\"\n\n\
         [augment]\ntransforms = 2\nmirror = true\n\n\
         [[robots]]\nname = \"arm6\"\nhome = {}\n\n\
         [robots.base]\nt = {}\nq = {}\n",
        fmt_vec(&home.0),
        fmt_vec(&base.t),
        fmt_vec(&base.q)
    )
}

/// Writes the fixture under `dir`: `config.toml`, `exemplars.json` and one
/// directory per clip under `clips/`. Returns the manifest paths.
pub fn write_fixture(dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("config.toml"), fixture_config())?;
    std::fs::write(
        dir.join("exemplars.json"),
        serde_json::to_string_pretty(&exemplar_file())? + "\n",
    )?;
    let w2c = cam_to_world().inverse();
    let anchors = BodyAnchors {
        hip_left: [0.15, -0.6, -0.1],
        hip_right: [-0.15, -0.6, -0.1],
        shoulder_left: [0.2, -0.6, 0.4],
        shoulder_right: [-0.2, -0.6, 0.4],
        up: [0.0, 0.0, 1.0],
        approach: [0.0, 1.0, 0.0],
    };
    let mut manifests = Vec::new();
    for clip in fixture_clips() {
        let cdir = dir.join("clips").join(&clip.id);
        std::fs::create_dir_all(&cdir)?;
        let hand_cam: Vec<HandFrame> = clip.hand.iter().map(|f| f.transformed(&w2c)).collect();
        let obj_cam: Vec<Pose> = clip.object.iter().map(|o| w2c.compose(o)).collect();
        write_hand_stream(&cdir.join("hand.jsonl"), &hand_cam)?;
        write_pose_stream(&cdir.join("object.jsonl"), &obj_cam)?;
        write_track(&cdir.join("track.jsonl"), &clip.track)?;
        std::fs::write(cdir.join("object.obj"), object_mesh().to_obj())?;
        std::fs::write(cdir.join("anchors.json"), serde_json::to_string_pretty(&anchors)? + "\n")?;
        let manifest = ClipManifest {
            schema_version: SCHEMA_VERSION,
            id: clip.id.clone(),
            fps: FPS,
            camera: None,
            cam_to_world: PoseRecord::from(&cam_to_world()),
            hand: "hand.jsonl".into(),
            object: Some("object.jsonl".into()),
            track: Some("track.jsonl".into()),
            mesh: Some("object.obj".into()),
            mesh_scale: 1.0,
            anchors: Some("anchors.json".into()),
            notes: "generated from arm6 forward kinematics".into(),
        };
        let path = cdir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
        manifests.push(path);
    }
    Ok(manifests)
}
