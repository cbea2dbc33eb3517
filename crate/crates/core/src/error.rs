use std::path::PathBuf;

use thiserror::Error;

use crate::kinematics::IkFailure;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate observation: {0}")]
    DegenerateObservation(String),

    #[error("degenerate frame: {0}")]
    DegenerateFrame(String),

    #[error("degenerate palm: {0}")]
    DegeneratePalm(String),

    #[error("degenerate chord: open segment starts and ends at the same point")]
    DegenerateChord,

    #[error("sign undefined: {0}")]
    SignUndefined(String),

    #[error("quaternion norm {0} deviates from 1 by more than 1e-3")]
    BadQuaternion(f64),

    #[error("rotation of {angle:.4} rad exceeds cap {cap:.4} rad")]
    RotationCap { angle: f64, cap: f64 },

    #[error("joint `{joint}` value {value} outside [{lower}, {upper}]")]
    OutOfLimits {
        joint: String,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("chain parse error at line {line}: {msg}")]
    ChainParse { line: u32, msg: String },

    #[error("ik did not converge: position residual {:.3e} m, rotation residual {:.3e} rad", .0.position_residual, .0.rotation_residual)]
    IkNonConvergence(Box<IkFailure>),

    #[error("length mismatch: `{a}` has {len_a} frames, `{b}` has {len_b}")]
    LengthMismatch {
        a: String,
        len_a: usize,
        b: String,
        len_b: usize,
    },

    #[error("unsupported schema version {0}")]
    SchemaVersion(u32),

    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
