//! Batch driver: canonicalize → retarget → penetration check → augment →
//! replay → metrics, with deterministic per-episode output.

pub mod config;
pub mod fixture;
pub mod run;
pub mod stages;

pub use config::*;
pub use run::*;
pub use stages::*;
