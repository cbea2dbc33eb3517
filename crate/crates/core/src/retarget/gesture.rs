//! k-nearest-neighbour gesture classification.
//!
//! Features are the 21 keypoints relative to the wrist, divided by the
//! wrist→middle-MCP distance, flattened to 63 values.

use serde::{Deserialize, Serialize};

use super::hand::{HandFrame, Keypoint, NUM_KEYPOINTS};
use crate::error::{Error, Result};

pub const DEFAULT_K: usize = 3;
pub const FEATURE_DIM: usize = NUM_KEYPOINTS * 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GestureClass {
    WholeHand,
    FingerOnly,
}

pub fn gesture_features(frame: &HandFrame) -> Result<[f64; FEATURE_DIM]> {
    let wrist = frame.kp(Keypoint::Wrist);
    let span = (frame.kp(Keypoint::MiddleMcp) - wrist).norm();
    if !(span > 1e-9) || !span.is_finite() {
        return Err(Error::DegeneratePalm("zero hand span".into()));
    }
    let mut out = [0.0; FEATURE_DIM];
    for (i, p) in frame.keypoints.iter().enumerate() {
        let v = (p - wrist) / span;
        out[3 * i..3 * i + 3].copy_from_slice(v.as_slice());
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Exemplar {
    pub label: GestureClass,
    pub features: [f64; FEATURE_DIM],
}

impl Exemplar {
    pub fn from_frame(label: GestureClass, frame: &HandFrame) -> Result<Self> {
        Ok(Exemplar {
            label,
            features: gesture_features(frame)?,
        })
    }
}

#[derive(Clone, Debug)]
pub struct GestureClassifier {
    exemplars: Vec<Exemplar>,
    k: usize,
}

impl GestureClassifier {
    pub fn new(exemplars: Vec<Exemplar>, k: usize) -> Result<Self> {
        if exemplars.is_empty() {
            return Err(Error::invalid("gesture exemplar set is empty"));
        }
        for label in [GestureClass::WholeHand, GestureClass::FingerOnly] {
            if !exemplars.iter().any(|e| e.label == label) {
                return Err(Error::invalid(format!("no exemplar labelled {label:?}")));
            }
        }
        if k == 0 || k.is_multiple_of(2) || k > exemplars.len() {
            return Err(Error::invalid(format!(
                "k must be odd and in 1..={}, got {k}",
                exemplars.len()
            )));
        }
        Ok(GestureClassifier { exemplars, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn exemplars(&self) -> &[Exemplar] {
        &self.exemplars
    }

    pub fn classify_features(&self, f: &[f64; FEATURE_DIM]) -> GestureClass {
        let mut dist: Vec<(f64, usize)> = self
            .exemplars
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let d2: f64 = e.features.iter().zip(f).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2, i)
            })
            .collect();
        // Ties resolve to the earlier exemplar, keeping the result deterministic.
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let whole = dist[..self.k]
            .iter()
            .filter(|(_, i)| self.exemplars[*i].label == GestureClass::WholeHand)
            .count();
        if 2 * whole > self.k {
            GestureClass::WholeHand
        } else {
            GestureClass::FingerOnly
        }
    }

    pub fn classify(&self, frame: &HandFrame) -> Result<GestureClass> {
        Ok(self.classify_features(&gesture_features(frame)?))
    }

    /// Majority label over the frames whose features are defined. Ties go to
    /// whole-hand. Errors if no frame can be classified.
    pub fn classify_clip(&self, frames: &[HandFrame]) -> Result<GestureClass> {
        let (mut whole, mut finger) = (0usize, 0usize);
        for f in frames {
            match self.classify(f) {
                Ok(GestureClass::WholeHand) => whole += 1,
                Ok(GestureClass::FingerOnly) => finger += 1,
                Err(_) => {}
            }
        }
        if whole + finger == 0 {
            return Err(Error::DegeneratePalm("no classifiable frame in clip".into()));
        }
        Ok(if whole >= finger {
            GestureClass::WholeHand
        } else {
            GestureClass::FingerOnly
        })
    }
}

pub fn classify_gesture(
    frame: &HandFrame,
    exemplars: &[Exemplar],
    k: usize,
) -> Result<GestureClass> {
    GestureClassifier::new(exemplars.to_vec(), k)?.classify(frame)
}
