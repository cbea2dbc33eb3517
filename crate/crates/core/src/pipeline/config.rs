use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::{AugmentSampling, SimilarityWeights, DEFAULT_TAU_SCREW};
use crate::canonical::SALIENT_DISTANCE;
use crate::error::{Error, Result};
use crate::geom::Pose;
use crate::io::{read_exemplars, PoseRecord};
use crate::kinematics::{fixtures, parse_chain, CollisionModel, IkOptions, JointConfig, KinematicChain};
use crate::plausibility::{ResolveOptions, DEFAULT_VOXEL};
use crate::retarget::{GestureClass, GestureClassifier, GripperStateConfig};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub canonical: CanonicalSection,
    pub retarget: RetargetSection,
    pub penetration: PenetrationSection,
    pub augment: AugmentSection,
    pub ik: IkOptions,
    pub robots: Vec<RobotConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CanonicalSection {
    pub up: [f64; 3],
    /// Approach used when neither anchors nor an object stream give one.
    pub fallback_approach: [f64; 3],
    pub salient_distance: f64,
}

impl Default for CanonicalSection {
    fn default() -> Self {
        CanonicalSection {
            up: [0.0, 0.0, 1.0],
            fallback_approach: [0.0, 1.0, 0.0],
            salient_distance: SALIENT_DISTANCE,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PalmSignMode {
    /// Palm normal points toward the object when one is tracked.
    #[default]
    Object,
    Handedness,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetargetSection {
    pub d_z: f64,
    pub palm_sign: PalmSignMode,
    pub gesture: Option<GestureClass>,
    pub exemplars: Option<PathBuf>,
    pub gripper_state: GripperStateConfig,
}

impl Default for RetargetSection {
    fn default() -> Self {
        RetargetSection {
            d_z: 0.0,
            palm_sign: PalmSignMode::Object,
            gesture: None,
            exemplars: None,
            gripper_state: GripperStateConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenetrationMode {
    Off,
    #[default]
    Flag,
    Resolve,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PenetrationSection {
    pub mode: PenetrationMode,
    pub voxel: f64,
    /// Depth (m) beyond which a frame counts as penetrating.
    pub depth_tolerance: f64,
    pub resolve: ResolveOptions,
}

impl Default for PenetrationSection {
    fn default() -> Self {
        PenetrationSection {
            mode: PenetrationMode::Flag,
            voxel: DEFAULT_VOXEL,
            depth_tolerance: 1e-3,
            resolve: ResolveOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentSection {
    /// Number of random object-frame transforms per clip.
    pub transforms: usize,
    pub mirror: bool,
    pub tau_screw: f64,
    pub task_axis: [f64; 3],
    pub sampling: AugmentSampling,
    pub asset_library: Option<PathBuf>,
    pub substitutes: usize,
    pub similarity: SimilarityWeights,
}

impl Default for AugmentSection {
    fn default() -> Self {
        AugmentSection {
            transforms: 0,
            mirror: false,
            tau_screw: DEFAULT_TAU_SCREW,
            task_axis: [0.0, 0.0, 1.0],
            sampling: AugmentSampling::default(),
            asset_library: None,
            substitutes: 0,
            similarity: SimilarityWeights::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotConfig {
    pub name: String,
    /// Chain file; built-in chains (`arm6`, `planar_2r`) need none.
    #[serde(default)]
    pub chain: Option<PathBuf>,
    #[serde(default = "default_root")]
    pub root: String,
    #[serde(default = "default_ee")]
    pub ee: String,
    /// Robot base pose in the canonical frame.
    #[serde(default = "identity_record")]
    pub base: PoseRecord,
    #[serde(default)]
    pub home: Option<Vec<f64>>,
    #[serde(default)]
    pub collisions: CollisionModel,
}

fn default_root() -> String {
    "base_link".into()
}

fn default_ee() -> String {
    "tool0".into()
}

fn identity_record() -> PoseRecord {
    PoseRecord::from(&Pose::identity())
}

impl RobotConfig {
    pub fn builtin(name: &str) -> Self {
        RobotConfig {
            name: name.into(),
            chain: None,
            root: default_root(),
            ee: default_ee(),
            base: PoseRecord::from(&Pose::from_translation(crate::geom::Vec3::new(0.0, -0.45, -0.2))),
            home: None,
            collisions: CollisionModel::default(),
        }
    }
}

/// A robot ready for replay.
#[derive(Clone, Debug)]
pub struct Robot {
    pub name: String,
    pub chain: KinematicChain,
    pub base: Pose,
    pub home: JointConfig,
    pub collisions: CollisionModel,
}

impl Robot {
    pub fn load(cfg: &RobotConfig) -> Result<Robot> {
        let chain = match &cfg.chain {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                let mut c = parse_chain(&text, &cfg.root, &cfg.ee)?;
                c.name = cfg.name.clone();
                c
            }
            None => match cfg.name.as_str() {
                "arm6" => fixtures::six_dof_arm(),
                "planar_2r" => fixtures::planar_2r(),
                other => return Err(Error::Config(format!("robot `{other}` has no chain file and is not built in"))),
            },
        };
        let home = match &cfg.home {
            Some(q) if q.len() == chain.dof() => JointConfig(q.clone()),
            Some(q) => {
                return Err(Error::Config(format!(
                    "robot `{}`: home has {} values, chain has {} joints",
                    cfg.name,
                    q.len(),
                    chain.dof()
                )))
            }
            None => JointConfig::zeros(chain.dof()),
        };
        chain.check_limits(&home).map_err(|e| Error::Config(format!("robot `{}` home: {e}", cfg.name)))?;
        Ok(Robot {
            name: cfg.name.clone(),
            base: cfg.base.to_pose().map_err(|e| Error::Config(format!("robot `{}` base: {e}", cfg.name)))?,
            chain,
            home,
            collisions: cfg.collisions.clone(),
        })
    }
}

impl PipelineConfig {
    /// Parses TOML and resolves relative paths against `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base_dir.join(&*path);
                }
            }
        };
        fix(&mut cfg.retarget.exemplars);
        fix(&mut cfg.augment.asset_library);
        for r in &mut cfg.robots {
            fix(&mut r.chain);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(self.penetration.voxel > 0.0) {
            return bad("penetration.voxel must be positive");
        }
        if !(self.augment.tau_screw > 0.0) {
            return bad("augment.tau_screw must be positive");
        }
        if !(self.augment.sampling.rotation_cap >= 0.0) {
            return bad("augment.sampling.rotation_cap must be ≥ 0");
        }
        if (0..3).any(|i| self.augment.sampling.reach_min[i] > self.augment.sampling.reach_max[i]) {
            return bad("augment.sampling.reach_min must not exceed reach_max");
        }
        if !(self.canonical.salient_distance > 0.0) {
            return bad("canonical.salient_distance must be positive");
        }
        self.augment.similarity.validate().map_err(|e| Error::Config(e.to_string()))?;
        let mut names: Vec<&str> = self.robots.iter().map(|r| r.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return bad("robot names must be unique");
        }
        Ok(())
    }

    /// Robots to replay on: the configured ones filtered by `only`, or the
    /// built-in `arm6` when none are configured.
    pub fn robots(&self, only: &[String]) -> Result<Vec<Robot>> {
        let configs: Vec<RobotConfig> = if self.robots.is_empty() {
            vec![RobotConfig::builtin("arm6")]
        } else {
            self.robots.clone()
        };
        let chosen: Vec<&RobotConfig> = if only.is_empty() {
            configs.iter().collect()
        } else {
            only.iter()
                .map(|n| {
                    configs
                        .iter()
                        .find(|r| &r.name == n)
                        .ok_or_else(|| Error::Config(format!("unknown robot `{n}`")))
                })
                .collect::<Result<_>>()?
        };
        if chosen.is_empty() {
            return Err(Error::Config("no robot registered".into()));
        }
        chosen.into_iter().map(Robot::load).collect()
    }

    pub fn classifier(&self) -> Result<Option<GestureClassifier>> {
        match &self.retarget.exemplars {
            None => Ok(None),
            Some(p) => {
                let (ex, k) = read_exemplars(p)?;
                Ok(Some(GestureClassifier::new(ex, k)?))
            }
        }
    }
}
