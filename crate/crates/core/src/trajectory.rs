//! End-effector trajectory types shared by retargeting, augmentation and replay.

use serde::{Deserialize, Serialize};

use crate::geom::Pose;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Handedness {
    Left,
    Right,
}

impl Handedness {
    pub fn flipped(self) -> Self {
        match self {
            Handedness::Left => Handedness::Right,
            Handedness::Right => Handedness::Left,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GripperCommand {
    Open,
    Closed,
}

/// Maximum opening of the modelled parallel-jaw gripper (m).
pub const MAX_GRIPPER_WIDTH: f64 = 0.12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GripperFrame {
    pub pose: Pose,
    pub command: GripperCommand,
    pub width: Option<f64>,
}

impl GripperFrame {
    pub fn new(pose: Pose, command: GripperCommand) -> Self {
        GripperFrame {
            pose,
            command,
            width: None,
        }
    }
}

/// Time series of end-effector poses and gripper commands.
#[derive(Clone, Debug, PartialEq)]
pub struct GripperTrajectory {
    pub fps: f64,
    pub chirality: Handedness,
    pub frames: Vec<GripperFrame>,
}

impl GripperTrajectory {
    pub fn new(fps: f64, chirality: Handedness, frames: Vec<GripperFrame>) -> Self {
        GripperTrajectory {
            fps,
            chirality,
            frames,
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn poses(&self) -> Vec<Pose> {
        self.frames.iter().map(|f| f.pose).collect()
    }

    pub fn commands(&self) -> Vec<GripperCommand> {
        self.frames.iter().map(|f| f.command).collect()
    }
}
