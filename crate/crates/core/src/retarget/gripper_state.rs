//! Open/closed detection from tracked object keypoints.
//!
//! A frame is raw-`closed` when the tracked keypoints moved, on average, more
//! than a threshold across the trailing window (the object is being carried)
//! and raw-`open` when they stayed put. A run-length hysteresis filter then
//! drops state changes that do not persist for enough frames.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::GripperCommand;

pub const DEFAULT_WINDOW: usize = 5;
pub const DEFAULT_THRESHOLD_3D: f64 = 0.005;
pub const DEFAULT_THRESHOLD_2D: f64 = 2.0;
pub const DEFAULT_HYSTERESIS: usize = 3;

/// Per-frame positions of tracked object keypoints; `None` marks an invalid
/// (occluded or lost) sample.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KeypointTrack {
    /// 2 (pixels) or 3 (meters).
    pub dims: usize,
    pub frames: Vec<Vec<Option<[f64; 3]>>>,
}

impl KeypointTrack {
    pub fn new(dims: usize, frames: Vec<Vec<Option<[f64; 3]>>>) -> Result<Self> {
        let t = KeypointTrack { dims, frames };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims != 2 && self.dims != 3 {
            return Err(Error::invalid(format!("track dims must be 2 or 3, got {}", self.dims)));
        }
        if self.dims == 2
            && self
                .frames
                .iter()
                .flatten()
                .flatten()
                .any(|p| p[2] != 0.0)
        {
            return Err(Error::invalid("2D track samples must have a zero third coordinate"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn default_threshold(&self) -> f64 {
        if self.dims == 2 {
            DEFAULT_THRESHOLD_2D
        } else {
            DEFAULT_THRESHOLD_3D
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GripperStateConfig {
    pub window: usize,
    /// `None` picks the default for the track dimensionality.
    pub threshold: Option<f64>,
    pub hysteresis: usize,
}

impl Default for GripperStateConfig {
    fn default() -> Self {
        GripperStateConfig {
            window: DEFAULT_WINDOW,
            threshold: None,
            hysteresis: DEFAULT_HYSTERESIS,
        }
    }
}

/// Mean displacement of the keypoints valid at both `a` and `b`.
fn mean_displacement(track: &KeypointTrack, a: usize, b: usize) -> Option<f64> {
    let (fa, fb) = (&track.frames[a], &track.frames[b]);
    let mut sum = 0.0;
    let mut n = 0usize;
    for (pa, pb) in fa.iter().zip(fb) {
        if let (Some(pa), Some(pb)) = (pa, pb) {
            let d = (0..3).map(|i| (pa[i] - pb[i]).powi(2)).sum::<f64>().sqrt();
            if d.is_finite() {
                sum += d;
                n += 1;
            }
        }
    }
    (n > 0).then(|| sum / n as f64)
}

/// Per-frame raw states before hysteresis.
pub fn raw_gripper_states(track: &KeypointTrack, window: usize, threshold: f64) -> Vec<GripperCommand> {
    let mut out = Vec::with_capacity(track.len());
    let mut prev = GripperCommand::Open;
    for t in 0..track.len() {
        let state = if t + 1 < window {
            prev
        } else {
            match mean_displacement(track, t + 1 - window, t) {
                Some(d) if d > threshold => GripperCommand::Closed,
                Some(_) => GripperCommand::Open,
                None => prev,
            }
        };
        out.push(state);
        prev = state;
    }
    out
}

/// Suppresses runs shorter than `min_run` that would change the state.
pub fn apply_hysteresis(raw: &[GripperCommand], min_run: usize) -> Vec<GripperCommand> {
    let mut out = Vec::with_capacity(raw.len());
    let mut committed = GripperCommand::Open;
    let mut i = 0;
    while i < raw.len() {
        let s = raw[i];
        let run = raw[i..].iter().take_while(|&&x| x == s).count();
        if s != committed && run >= min_run.max(1) {
            committed = s;
        }
        out.extend(std::iter::repeat_n(committed, run));
        i += run;
    }
    out
}

pub fn detect_gripper_state(track: &KeypointTrack, config: &GripperStateConfig) -> Result<Vec<GripperCommand>> {
    track.validate()?;
    if config.window < 2 {
        return Err(Error::invalid("gripper-state window must be at least 2 frames"));
    }
    let threshold = config.threshold.unwrap_or_else(|| track.default_threshold());
    if !(threshold > 0.0) {
        return Err(Error::invalid("gripper-state threshold must be positive"));
    }
    let raw = raw_gripper_states(track, config.window, threshold);
    Ok(apply_hysteresis(&raw, config.hysteresis))
}

#[cfg(test)]
mod tests {
    use super::*;
    use GripperCommand::{Closed, Open};

    fn track_from(f: impl Fn(usize, usize) -> Option<[f64; 3]>, frames: usize, points: usize) -> KeypointTrack {
        KeypointTrack::new(3, (0..frames).map(|t| (0..points).map(|k| f(t, k)).collect()).collect()).unwrap()
    }

    #[test]
    fn static_keypoints_stay_open() {
        let tr = track_from(|_, k| Some([k as f64, 0.0, 0.0]), 20, 4);
        let s = detect_gripper_state(&tr, &GripperStateConfig::default()).unwrap();
        assert!(s.iter().all(|c| *c == Open));
    }

    #[test]
    fn translating_keypoints_close_after_first_full_window() {
        let tr = track_from(|t, k| Some([0.02 * t as f64, k as f64, 0.0]), 20, 3);
        let cfg = GripperStateConfig { window: 5, threshold: Some(0.005), hysteresis: 3 };
        let s = detect_gripper_state(&tr, &cfg).unwrap();
        // The first full 5-frame window ends at frame 4 with 0.08 m displacement.
        assert_eq!(&s[..4], &[Open; 4]);
        assert!(s[4..].iter().all(|c| *c == Closed));
    }

    #[test]
    fn single_frame_spike_is_suppressed() {
        let tr = track_from(|t, _| Some([if t == 10 { 0.05 } else { 0.0 }, 0.0, 0.0]), 30, 2);
        let cfg = GripperStateConfig { window: 5, threshold: Some(0.005), hysteresis: 3 };
        let raw = raw_gripper_states(&tr, 5, 0.005);
        assert!(raw.contains(&Closed));
        let s = detect_gripper_state(&tr, &cfg).unwrap();
        assert!(s.iter().all(|c| *c == Open));
    }

    #[test]
    fn missing_samples_carry_state() {
        let tr = track_from(
            |t, _| if (8..12).contains(&t) { None } else { Some([0.02 * t as f64, 0.0, 0.0]) },
            20,
            2,
        );
        let raw = raw_gripper_states(&tr, 2, 0.005);
        assert_eq!(raw[0], Open);
        // Windows touching the gap carry the previous (closed) state.
        assert!(raw[8..13].iter().all(|c| *c == Closed));
    }

    #[test]
    fn stationary_distractors_below_threshold_do_not_change_output() {
        let moving = |t: usize| [0.02 * t as f64, 0.0, 0.0];
        let base = track_from(|t, _| Some(moving(t)), 20, 1);
        // The mean over (moving, static) halves the displacement but stays above threshold.
        let with_static = track_from(|t, k| Some(if k == 0 { moving(t) } else { [1.0, 1.0, 1.0] }), 20, 2);
        let cfg = GripperStateConfig { window: 5, threshold: Some(0.005), hysteresis: 3 };
        assert_eq!(detect_gripper_state(&base, &cfg).unwrap(), detect_gripper_state(&with_static, &cfg).unwrap());
    }

    #[test]
    fn bad_config_is_rejected() {
        let tr = track_from(|_, _| Some([0.0; 3]), 3, 1);
        let cfg = GripperStateConfig { window: 1, ..Default::default() };
        assert!(detect_gripper_state(&tr, &cfg).is_err());
        let cfg = GripperStateConfig { threshold: Some(0.0), ..Default::default() };
        assert!(detect_gripper_state(&tr, &cfg).is_err());
        assert!(KeypointTrack::new(4, vec![]).is_err());
    }

    #[test]
    fn hysteresis_keeps_long_runs_whole() {
        let raw = [Open, Closed, Closed, Closed, Open, Closed, Closed, Closed, Closed];
        let out = apply_hysteresis(&raw, 3);
        assert_eq!(out, vec![Open, Closed, Closed, Closed, Closed, Closed, Closed, Closed, Closed]);
    }
}
