//! Serial kinematic chains: parsing, forward kinematics, inverse kinematics
//! and seeded trajectory replay.

mod chain;
pub mod fixtures;
mod solve;

pub use chain::{parse_chain, parse_chain_path, Joint, JointConfig, JointKind, KinematicChain};
pub use solve::{
    fk, fk_unchecked, ik_solve, jacobian, pose_error, replay_trajectory, CollisionModel,
    IkFailure, IkOptions, IkSolution, LinkCapsule, LinkSphere, Replay, ReplayReport,
};
