//! On-disk formats: JSONL streams, clip manifests, exemplar and asset
//! libraries. All units are SI; quaternions are stored w-first.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::augment::ObjectAsset;
use crate::canonical::{BodyAnchors, CameraModel};
use crate::error::{Error, Result};
use crate::geom::{Pose, Rot3, Vec3};
use crate::kinematics::JointConfig;
use crate::plausibility::{load_obj, TriMesh};
use crate::retarget::{Exemplar, GestureClass, HandFrame, KeypointTrack, FEATURE_DIM, NUM_KEYPOINTS};
use crate::trajectory::{GripperCommand, GripperFrame, GripperTrajectory, Handedness};

pub const SCHEMA_VERSION: u32 = 1;

fn format_err(path: &Path, msg: impl std::fmt::Display) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        msg: msg.to_string(),
    }
}

fn check_version(v: u32) -> Result<()> {
    if v != SCHEMA_VERSION {
        return Err(Error::SchemaVersion(v));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    pub t: [f64; 3],
    pub q: [f64; 4],
}

impl From<&Pose> for PoseRecord {
    fn from(p: &Pose) -> Self {
        PoseRecord {
            t: p.trans.into(),
            q: p.rot.to_quaternion_wxyz(),
        }
    }
}

impl PoseRecord {
    pub fn to_pose(&self) -> Result<Pose> {
        if !self.t.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("non-finite translation"));
        }
        Ok(Pose::new(Rot3::from_quaternion_wxyz(self.q)?, Vec3::from(self.t)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HandRecord {
    pub joints: Vec<[f64; 3]>,
    pub handedness: Handedness,
}

impl HandRecord {
    pub fn to_frame(&self) -> Result<HandFrame> {
        if self.joints.len() != NUM_KEYPOINTS {
            return Err(Error::invalid(format!("expected {NUM_KEYPOINTS} joints, got {}", self.joints.len())));
        }
        let mut kps = [Vec3::zeros(); NUM_KEYPOINTS];
        for (k, j) in kps.iter_mut().zip(&self.joints) {
            *k = Vec3::from(*j);
        }
        if !kps.iter().all(|p| p.iter().all(|v| v.is_finite())) {
            return Err(Error::invalid("non-finite hand joint"));
        }
        Ok(HandFrame::new(kps, self.handedness))
    }
}

impl From<&HandFrame> for HandRecord {
    fn from(f: &HandFrame) -> Self {
        HandRecord {
            joints: f.keypoints.iter().map(|p| (*p).into()).collect(),
            handedness: f.handedness,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GripperRecord {
    pub t: [f64; 3],
    pub q: [f64; 4],
    pub command: GripperCommand,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub points: Vec<Option<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointRecord {
    pub q: Vec<f64>,
}

/// First line of every stream file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamHeader {
    pub schema_version: u32,
    pub stream: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chirality: Option<Handedness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robot: Option<String>,
}

impl StreamHeader {
    pub fn new(stream: &str) -> Self {
        StreamHeader {
            schema_version: SCHEMA_VERSION,
            stream: stream.into(),
            fps: None,
            dims: None,
            chirality: None,
            robot: None,
        }
    }
}

/// Serializes a header and records as JSONL text.
pub fn jsonl_string<T: Serialize>(header: &StreamHeader, records: &[T]) -> Result<String> {
    let mut s = serde_json::to_string(header)?;
    s.push('\n');
    for r in records {
        s.push_str(&serde_json::to_string(r)?);
        s.push('\n');
    }
    Ok(s)
}

pub fn write_jsonl<T: Serialize>(path: &Path, header: &StreamHeader, records: &[T]) -> Result<()> {
    fs::write(path, jsonl_string(header, records)?)?;
    Ok(())
}

/// Reads a stream, checking the schema version and stream kind.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path, stream: &str) -> Result<(StreamHeader, Vec<T>)> {
    let file = fs::File::open(path).map_err(|e| format_err(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let header: StreamHeader = loop {
        match lines.next() {
            Some((_, line)) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break serde_json::from_str(&line).map_err(|e| format_err(path, format!("header: {e}")))?;
                }
            }
            None => return Err(format_err(path, "empty stream")),
        }
    };
    check_version(header.schema_version)?;
    if header.stream != stream {
        return Err(format_err(path, format!("expected a `{stream}` stream, found `{}`", header.stream)));
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| format_err(path, format!("line {}: {e}", i + 1)))?);
    }
    Ok((header, out))
}

pub fn read_pose_stream(path: &Path) -> Result<Vec<Pose>> {
    let (_, recs): (_, Vec<PoseRecord>) = read_jsonl(path, "pose")?;
    recs.iter()
        .enumerate()
        .map(|(i, r)| r.to_pose().map_err(|e| format_err(path, format!("frame {i}: {e}"))))
        .collect()
}

pub fn write_pose_stream(path: &Path, poses: &[Pose]) -> Result<()> {
    let recs: Vec<PoseRecord> = poses.iter().map(PoseRecord::from).collect();
    write_jsonl(path, &StreamHeader::new("pose"), &recs)
}

pub fn read_hand_stream(path: &Path) -> Result<Vec<HandFrame>> {
    let (_, recs): (_, Vec<HandRecord>) = read_jsonl(path, "hand")?;
    recs.iter()
        .enumerate()
        .map(|(i, r)| r.to_frame().map_err(|e| format_err(path, format!("frame {i}: {e}"))))
        .collect()
}

pub fn write_hand_stream(path: &Path, frames: &[HandFrame]) -> Result<()> {
    let recs: Vec<HandRecord> = frames.iter().map(HandRecord::from).collect();
    write_jsonl(path, &StreamHeader::new("hand"), &recs)
}

pub fn read_track(path: &Path) -> Result<KeypointTrack> {
    let (h, recs): (_, Vec<TrackRecord>) = read_jsonl(path, "track")?;
    let dims = h.dims.ok_or_else(|| format_err(path, "track header needs `dims`"))?;
    let frames = recs
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.points
                .into_iter()
                .map(|p| match p {
                    None => Ok(None),
                    Some(v) if v.len() == dims => Ok(Some([v[0], v[1], if dims == 3 { v[2] } else { 0.0 }])),
                    Some(v) => Err(format_err(path, format!("frame {i}: point has {} coords, expected {dims}", v.len()))),
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    KeypointTrack::new(dims, frames).map_err(|e| format_err(path, e))
}

pub fn write_track(path: &Path, track: &KeypointTrack) -> Result<()> {
    let mut h = StreamHeader::new("track");
    h.dims = Some(track.dims);
    let recs: Vec<TrackRecord> = track
        .frames
        .iter()
        .map(|f| TrackRecord {
            points: f.iter().map(|p| p.map(|p| p[..track.dims].to_vec())).collect(),
        })
        .collect();
    write_jsonl(path, &h, &recs)
}

pub fn gripper_jsonl(traj: &GripperTrajectory) -> Result<String> {
    let mut h = StreamHeader::new("gripper");
    h.fps = Some(traj.fps);
    h.chirality = Some(traj.chirality);
    let recs: Vec<GripperRecord> = traj
        .frames
        .iter()
        .map(|f| {
            let p = PoseRecord::from(&f.pose);
            GripperRecord {
                t: p.t,
                q: p.q,
                command: f.command,
                width: f.width,
            }
        })
        .collect();
    jsonl_string(&h, &recs)
}

pub fn write_gripper_trajectory(path: &Path, traj: &GripperTrajectory) -> Result<()> {
    fs::write(path, gripper_jsonl(traj)?)?;
    Ok(())
}

pub fn read_gripper_trajectory(path: &Path) -> Result<GripperTrajectory> {
    let (h, recs): (_, Vec<GripperRecord>) = read_jsonl(path, "gripper")?;
    let fps = h.fps.ok_or_else(|| format_err(path, "gripper header needs `fps`"))?;
    let chirality = h.chirality.unwrap_or(Handedness::Right);
    let frames = recs
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let pose = PoseRecord { t: r.t, q: r.q }
                .to_pose()
                .map_err(|e| format_err(path, format!("frame {i}: {e}")))?;
            Ok(GripperFrame {
                pose,
                command: r.command,
                width: r.width,
            })
        })
        .collect::<Result<_>>()?;
    Ok(GripperTrajectory::new(fps, chirality, frames))
}

pub fn joints_jsonl(robot: &str, configs: &[JointConfig]) -> Result<String> {
    let mut h = StreamHeader::new("joints");
    h.robot = Some(robot.into());
    let recs: Vec<JointRecord> = configs.iter().map(|q| JointRecord { q: q.0.clone() }).collect();
    jsonl_string(&h, &recs)
}

/// Clip description; stream paths are relative to the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClipManifest {
    pub schema_version: u32,
    pub id: String,
    pub fps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera: Option<CameraModel>,
    #[serde(default = "identity_record")]
    pub cam_to_world: PoseRecord,
    pub hand: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub track: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<PathBuf>,
    /// Metric scale applied to the mesh vertices.
    #[serde(default = "one")]
    pub mesh_scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchors: Option<PathBuf>,
    #[serde(default)]
    pub notes: String,
}

fn identity_record() -> PoseRecord {
    PoseRecord::from(&Pose::identity())
}

fn one() -> f64 {
    1.0
}

/// A loaded, length-checked clip in camera coordinates.
#[derive(Clone, Debug)]
pub struct Clip {
    pub id: String,
    pub fps: f64,
    pub camera: Option<CameraModel>,
    pub cam_to_world: Pose,
    pub hand: Vec<HandFrame>,
    pub object: Option<Vec<Pose>>,
    pub track: Option<KeypointTrack>,
    pub mesh: Option<TriMesh>,
    pub anchors: Option<BodyAnchors>,
    pub notes: String,
}

pub fn read_manifest(path: &Path) -> Result<ClipManifest> {
    let text = fs::read_to_string(path).map_err(|e| format_err(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| format_err(path, e))?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        None => return Err(format_err(path, "missing schema_version")),
        Some(v) => check_version(u32::try_from(v).unwrap_or(u32::MAX))?,
    }
    let m: ClipManifest = serde_json::from_value(value).map_err(|e| format_err(path, e))?;
    if !(m.fps > 0.0) {
        return Err(format_err(path, "fps must be positive"));
    }
    if !(m.mesh_scale > 0.0) {
        return Err(format_err(path, "mesh_scale must be positive"));
    }
    if let Some(c) = &m.camera {
        c.validate().map_err(|e| format_err(path, e))?;
    }
    Ok(m)
}

fn length_check(a: &str, len_a: usize, b: &str, len_b: usize) -> Result<()> {
    if len_a != len_b {
        return Err(Error::LengthMismatch {
            a: a.into(),
            len_a,
            b: b.into(),
            len_b,
        });
    }
    Ok(())
}

pub fn load_clip(manifest_path: &Path) -> Result<Clip> {
    let m = read_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let resolve = |p: &Path| base.join(p);
    let hand = read_hand_stream(&resolve(&m.hand))?;
    if hand.is_empty() {
        return Err(format_err(manifest_path, "hand stream is empty"));
    }
    let object = m.object.as_deref().map(|p| read_pose_stream(&resolve(p))).transpose()?;
    if let Some(o) = &object {
        length_check("hand", hand.len(), "object", o.len())?;
    }
    let track = m.track.as_deref().map(|p| read_track(&resolve(p))).transpose()?;
    if let Some(t) = &track {
        length_check("hand", hand.len(), "track", t.len())?;
    }
    let mesh = m
        .mesh
        .as_deref()
        .map(|p| load_obj(&resolve(p)).map(|mesh| mesh.scaled(m.mesh_scale)))
        .transpose()?;
    let anchors = m
        .anchors
        .as_deref()
        .map(|p| -> Result<BodyAnchors> {
            let path = resolve(p);
            let text = fs::read_to_string(&path).map_err(|e| format_err(&path, e))?;
            let a: BodyAnchors = serde_json::from_str(&text).map_err(|e| format_err(&path, e))?;
            a.validate().map_err(|e| format_err(&path, e))?;
            Ok(a)
        })
        .transpose()?;
    Ok(Clip {
        id: m.id,
        fps: m.fps,
        camera: m.camera,
        cam_to_world: m.cam_to_world.to_pose().map_err(|e| format_err(manifest_path, e))?,
        hand,
        object,
        track,
        mesh,
        anchors,
        notes: m.notes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExemplarRecord {
    pub label: GestureClass,
    /// Either 21 joints or a ready feature vector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joints: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExemplarFile {
    pub schema_version: u32,
    #[serde(default = "default_k")]
    pub k: usize,
    pub exemplars: Vec<ExemplarRecord>,
}

fn default_k() -> usize {
    crate::retarget::DEFAULT_K
}

pub fn read_exemplars(path: &Path) -> Result<(Vec<Exemplar>, usize)> {
    let text = fs::read_to_string(path).map_err(|e| format_err(path, e))?;
    let f: ExemplarFile = serde_json::from_str(&text).map_err(|e| format_err(path, e))?;
    check_version(f.schema_version)?;
    let ex = f
        .exemplars
        .iter()
        .enumerate()
        .map(|(i, r)| match (&r.joints, &r.features) {
            (Some(j), _) => {
                let frame = HandRecord {
                    joints: j.clone(),
                    handedness: Handedness::Right,
                }
                .to_frame()?;
                Exemplar::from_frame(r.label, &frame)
            }
            (None, Some(v)) if v.len() == FEATURE_DIM => {
                let mut features = [0.0; FEATURE_DIM];
                features.copy_from_slice(v);
                Ok(Exemplar { label: r.label, features })
            }
            _ => Err(Error::invalid(format!("exemplar {i}: needs 21 joints or {FEATURE_DIM} features"))),
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| format_err(path, e))?;
    Ok((ex, f.k))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssetEntry {
    pub id: String,
    pub mesh_path: PathBuf,
    #[serde(default = "identity_record")]
    pub canonical_pose: PoseRecord,
    #[serde(default)]
    pub category: String,
    #[serde(default)]
    pub embedding: Option<Vec<f64>>,
}

/// Loads a JSON array of asset entries; mesh paths are relative to the file.
pub fn read_asset_library(path: &Path) -> Result<Vec<ObjectAsset>> {
    let text = fs::read_to_string(path).map_err(|e| format_err(path, e))?;
    let entries: Vec<AssetEntry> = serde_json::from_str(&text).map_err(|e| format_err(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    entries
        .into_iter()
        .map(|e| {
            Ok(ObjectAsset {
                mesh: load_obj(&base.join(&e.mesh_path))?,
                canonical_pose: e.canonical_pose.to_pose().map_err(|err| format_err(path, err))?,
                id: e.id,
                category: e.category,
                embedding: e.embedding,
            })
        })
        .collect()
}

/// Writes a directory atomically: files go to a sibling temp directory that
/// is renamed over `dir`.
pub fn write_dir_atomic(dir: &Path, files: &[(String, String)]) -> Result<()> {
    let parent = dir.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(parent)?;
    let name = dir
        .file_name()
        .ok_or_else(|| Error::invalid(format!("bad output directory {}", dir.display())))?
        .to_string_lossy();
    let tmp = parent.join(format!(".{name}.tmp-{}", std::process::id()));
    if tmp.exists() {
        fs::remove_dir_all(&tmp)?;
    }
    fs::create_dir_all(&tmp)?;
    for (file, contents) in files {
        fs::write(tmp.join(file), contents)?;
    }
    if dir.exists() {
        fs::remove_dir_all(dir)?;
    }
    fs::rename(&tmp, dir)?;
    Ok(())
}
