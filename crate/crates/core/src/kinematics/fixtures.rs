//! Small reference chains used by tests, the demo and the bundled fixture.

use std::f64::consts::PI;

use super::chain::{Joint, KinematicChain};
use crate::geom::{Pose, Vec3};

/// Planar two-link arm with unit links rotating about `z`.
pub fn planar_2r() -> KinematicChain {
    KinematicChain::from_joints(
        "planar_2r",
        &[
            Joint::revolute("shoulder", Pose::identity(), Vec3::z(), -PI, PI),
            Joint::revolute("elbow", Pose::from_translation(Vec3::x()), Vec3::z(), -PI, PI),
            Joint::fixed("tip", Pose::from_translation(Vec3::x())),
        ],
    )
    .expect("valid chain")
}

/// Six-revolute arm with a spherical-style wrist, about 1.1 m of reach.
pub fn six_dof_arm() -> KinematicChain {
    let up = |z: f64| Pose::from_translation(Vec3::new(0.0, 0.0, z));
    KinematicChain::from_joints(
        "arm6",
        &[
            Joint::revolute("joint1", up(0.1), Vec3::z(), -3.0, 3.0),
            Joint::revolute("joint2", up(0.1), Vec3::y(), -2.5, 2.5),
            Joint::revolute("joint3", up(0.4), Vec3::y(), -2.8, 2.8),
            Joint::revolute("joint4", up(0.35), Vec3::z(), -3.0, 3.0),
            Joint::revolute("joint5", up(0.08), Vec3::y(), -2.5, 2.5),
            Joint::revolute("joint6", up(0.08), Vec3::z(), -3.0, 3.0),
            Joint::fixed("tool", up(0.05)),
        ],
    )
    .expect("valid chain")
}

/// [`six_dof_arm`] written in the chain dialect.
pub const SIX_DOF_URDF: &str = r#"<?xml version="1.0"?>
<robot name="arm6">
  <link name="base_link"/>
  <link name="link1"/>
  <link name="link2"/>
  <link name="link3"/>
  <link name="link4"/>
  <link name="link5"/>
  <link name="link6"/>
  <link name="tool0"/>
  <joint name="joint1" type="revolute">
    <parent link="base_link"/><child link="link1"/>
    <origin xyz="0 0 0.1" rpy="0 0 0"/><axis xyz="0 0 1"/>
    <limit lower="-3.0" upper="3.0"/>
  </joint>
  <joint name="joint2" type="revolute">
    <parent link="link1"/><child link="link2"/>
    <origin xyz="0 0 0.1" rpy="0 0 0"/><axis xyz="0 1 0"/>
    <limit lower="-2.5" upper="2.5"/>
  </joint>
  <joint name="joint3" type="revolute">
    <parent link="link2"/><child link="link3"/>
    <origin xyz="0 0 0.4" rpy="0 0 0"/><axis xyz="0 1 0"/>
    <limit lower="-2.8" upper="2.8"/>
  </joint>
  <joint name="joint4" type="revolute">
    <parent link="link3"/><child link="link4"/>
    <origin xyz="0 0 0.35" rpy="0 0 0"/><axis xyz="0 0 1"/>
    <limit lower="-3.0" upper="3.0"/>
  </joint>
  <joint name="joint5" type="revolute">
    <parent link="link4"/><child link="link5"/>
    <origin xyz="0 0 0.08" rpy="0 0 0"/><axis xyz="0 1 0"/>
    <limit lower="-2.5" upper="2.5"/>
  </joint>
  <joint name="joint6" type="revolute">
    <parent link="link5"/><child link="link6"/>
    <origin xyz="0 0 0.08" rpy="0 0 0"/><axis xyz="0 0 1"/>
    <limit lower="-3.0" upper="3.0"/>
  </joint>
  <joint name="tool_joint" type="fixed">
    <parent link="link6"/><child link="tool0"/>
    <origin xyz="0 0 0.05" rpy="0 0 0"/>
  </joint>
</robot>
"#;
