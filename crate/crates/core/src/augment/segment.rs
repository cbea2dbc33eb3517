use serde::{Deserialize, Serialize};

use crate::trajectory::{GripperCommand, GripperTrajectory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentState {
    Hold,
    Open,
}

/// Inclusive frame range `[start, end]` with a constant contact state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub state: SegmentState,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn range(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }
}

/// Maximal runs of constant gripper command; closed runs are holds.
pub fn segment_trajectory(traj: &GripperTrajectory) -> Vec<Segment> {
    let mut out: Vec<Segment> = Vec::new();
    for (t, f) in traj.frames.iter().enumerate() {
        let state = match f.command {
            GripperCommand::Closed => SegmentState::Hold,
            GripperCommand::Open => SegmentState::Open,
        };
        match out.last_mut() {
            Some(s) if s.state == state => s.end = t,
            _ => out.push(Segment { start: t, end: t, state }),
        }
    }
    out
}
