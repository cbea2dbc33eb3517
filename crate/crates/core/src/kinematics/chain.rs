//! Serial chains and the URDF-subset reader.

use std::collections::HashMap;

use log::warn;

use crate::error::{Error, Result};
use crate::geom::{Pose, Rot3, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JointKind {
    Revolute,
    Prismatic,
    Fixed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Joint {
    pub name: String,
    pub kind: JointKind,
    /// Parent-to-joint transform applied before the joint motion.
    pub origin: Pose,
    pub axis: Vec3,
    pub lower: f64,
    pub upper: f64,
}

impl Joint {
    pub fn revolute(name: &str, origin: Pose, axis: Vec3, lower: f64, upper: f64) -> Self {
        Joint {
            name: name.into(),
            kind: JointKind::Revolute,
            origin,
            axis: axis.normalize(),
            lower,
            upper,
        }
    }

    pub fn prismatic(name: &str, origin: Pose, axis: Vec3, lower: f64, upper: f64) -> Self {
        Joint {
            kind: JointKind::Prismatic,
            ..Joint::revolute(name, origin, axis, lower, upper)
        }
    }

    pub fn fixed(name: &str, origin: Pose) -> Self {
        Joint {
            name: name.into(),
            kind: JointKind::Fixed,
            origin,
            axis: Vec3::x(),
            lower: 0.0,
            upper: 0.0,
        }
    }

    /// Transform contributed by this joint at position `q`.
    pub fn transform(&self, q: f64) -> Pose {
        let motion = match self.kind {
            JointKind::Revolute => Pose::from_rotation(Rot3::from_axis_angle(&self.axis, q)),
            JointKind::Prismatic => Pose::from_translation(self.axis * q),
            JointKind::Fixed => return self.origin,
        };
        self.origin.compose(&motion)
    }

    pub fn is_movable(&self) -> bool {
        self.kind != JointKind::Fixed
    }
}

/// Joint values, one per movable joint (rad for revolute, m for prismatic).
#[derive(Clone, Debug, PartialEq, Default)]
pub struct JointConfig(pub Vec<f64>);

impl JointConfig {
    pub fn zeros(n: usize) -> Self {
        JointConfig(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn max_abs_diff(&self, other: &JointConfig) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl From<Vec<f64>> for JointConfig {
    fn from(v: Vec<f64>) -> Self {
        JointConfig(v)
    }
}

/// A serial chain with fixed joints folded into the following movable
/// joint's origin (or into the end-effector offset).
#[derive(Clone, Debug, PartialEq)]
pub struct KinematicChain {
    pub name: String,
    pub joints: Vec<Joint>,
    pub ee_offset: Pose,
    pub warnings: Vec<String>,
}

impl KinematicChain {
    /// Builds a chain from an ordered root→EE joint list, folding fixed joints.
    pub fn from_joints(name: &str, path: &[Joint]) -> Result<Self> {
        let mut joints = Vec::new();
        let mut pending = Pose::identity();
        for j in path {
            match j.kind {
                JointKind::Fixed => pending = pending.compose(&j.origin),
                _ => {
                    if !(j.lower <= j.upper) {
                        return Err(Error::invalid(format!("joint `{}` has lower > upper", j.name)));
                    }
                    let axis = j
                        .axis
                        .try_normalize(1e-12)
                        .ok_or_else(|| Error::invalid(format!("joint `{}` has a zero axis", j.name)))?;
                    joints.push(Joint {
                        origin: pending.compose(&j.origin),
                        axis,
                        ..j.clone()
                    });
                    pending = Pose::identity();
                }
            }
        }
        Ok(KinematicChain {
            name: name.into(),
            joints,
            ee_offset: pending,
            warnings: Vec::new(),
        })
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn lower(&self) -> Vec<f64> {
        self.joints.iter().map(|j| j.lower).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.joints.iter().map(|j| j.upper).collect()
    }

    pub fn clamp(&self, q: &mut JointConfig) {
        for (v, j) in q.0.iter_mut().zip(&self.joints) {
            *v = v.clamp(j.lower, j.upper);
        }
    }

    pub fn check_limits(&self, q: &JointConfig) -> Result<()> {
        if q.len() != self.dof() {
            return Err(Error::invalid(format!(
                "chain `{}` has {} movable joints, config has {}",
                self.name,
                self.dof(),
                q.len()
            )));
        }
        for (v, j) in q.0.iter().zip(&self.joints) {
            if !(j.lower - 1e-12..=j.upper + 1e-12).contains(v) {
                return Err(Error::OutOfLimits {
                    joint: j.name.clone(),
                    value: *v,
                    lower: j.lower,
                    upper: j.upper,
                });
            }
        }
        Ok(())
    }

    /// Sum of link offsets; an upper bound on reach from the root.
    pub fn reach_bound(&self) -> f64 {
        let mut total = self.ee_offset.trans.norm();
        for j in &self.joints {
            total += j.origin.trans.norm();
            if j.kind == JointKind::Prismatic {
                total += j.lower.abs().max(j.upper.abs());
            }
        }
        total
    }
}

fn line_of(doc: &roxmltree::Document<'_>, node: roxmltree::Node<'_, '_>) -> u32 {
    doc.text_pos_at(node.range().start).row
}

fn parse_floats<const N: usize>(
    doc: &roxmltree::Document<'_>,
    node: roxmltree::Node<'_, '_>,
    attr: &str,
    default: [f64; N],
) -> Result<[f64; N]> {
    let Some(text) = node.attribute(attr) else {
        return Ok(default);
    };
    let vals: Vec<f64> = text
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::ChainParse {
            line: line_of(doc, node),
            msg: format!("attribute `{attr}`: {e}"),
        })?;
    vals.try_into().map_err(|v: Vec<f64>| Error::ChainParse {
        line: line_of(doc, node),
        msg: format!("attribute `{attr}` needs {N} numbers, got {}", v.len()),
    })
}

fn required_attr<'a>(
    doc: &roxmltree::Document<'_>,
    node: roxmltree::Node<'a, '_>,
    attr: &str,
) -> Result<&'a str> {
    node.attribute(attr).ok_or_else(|| Error::ChainParse {
        line: line_of(doc, node),
        msg: format!("<{}> is missing `{attr}`", node.tag_name().name()),
    })
}

struct ParsedJoint {
    joint: Joint,
    parent: String,
    child: String,
    line: u32,
}

/// Joints on the root→EE path in order, fixed joints included.
pub fn parse_chain_path(document: &str, root: &str, ee: &str) -> Result<(String, Vec<Joint>, Vec<String>)> {
    let doc = roxmltree::Document::parse(document).map_err(|e| Error::ChainParse {
        line: e.pos().row,
        msg: e.to_string(),
    })?;
    let robot = doc.root_element();
    if robot.tag_name().name() != "robot" {
        return Err(Error::ChainParse {
            line: line_of(&doc, robot),
            msg: format!("expected <robot>, found <{}>", robot.tag_name().name()),
        });
    }
    let robot_name = robot.attribute("name").unwrap_or("robot").to_string();
    let mut warnings = Vec::new();
    let mut links = Vec::new();
    let mut joints = Vec::new();

    for node in robot.children().filter(|n| n.is_element()) {
        match node.tag_name().name() {
            "link" => links.push(required_attr(&doc, node, "name")?.to_string()),
            "joint" => joints.push(parse_joint(&doc, node, &mut warnings)?),
            other => warnings.push(format!("line {}: ignored <{other}>", line_of(&doc, node))),
        }
    }
    for name in [root, ee] {
        if !links.iter().any(|l| l == name) {
            return Err(Error::ChainParse {
                line: line_of(&doc, robot),
                msg: format!("link `{name}` not declared"),
            });
        }
    }

    let mut by_child: HashMap<&str, Vec<&ParsedJoint>> = HashMap::new();
    for j in &joints {
        by_child.entry(j.child.as_str()).or_default().push(j);
    }
    let mut path = Vec::new();
    let mut link = ee;
    while link != root {
        let parents = by_child.get(link).map(Vec::as_slice).unwrap_or(&[]);
        match parents {
            [] => {
                return Err(Error::ChainParse {
                    line: line_of(&doc, robot),
                    msg: format!("no path from `{root}` to `{ee}` (link `{link}` has no parent joint)"),
                })
            }
            [j] => {
                path.push(j.joint.clone());
                link = j.parent.as_str();
            }
            [_, second, ..] => {
                return Err(Error::ChainParse {
                    line: second.line,
                    msg: format!("branching path: link `{link}` has several parent joints"),
                })
            }
        }
        if path.len() > joints.len() {
            return Err(Error::ChainParse {
                line: line_of(&doc, robot),
                msg: "joint graph contains a cycle".into(),
            });
        }
    }
    path.reverse();
    for w in &warnings {
        warn!("{w}");
    }
    Ok((robot_name, path, warnings))
}

fn parse_joint(
    doc: &roxmltree::Document<'_>,
    node: roxmltree::Node<'_, '_>,
    warnings: &mut Vec<String>,
) -> Result<ParsedJoint> {
    let line = line_of(doc, node);
    let name = required_attr(doc, node, "name")?.to_string();
    let kind = match required_attr(doc, node, "type")? {
        "revolute" => JointKind::Revolute,
        "prismatic" => JointKind::Prismatic,
        "fixed" => JointKind::Fixed,
        other => {
            return Err(Error::ChainParse {
                line,
                msg: format!("joint `{name}`: unsupported type `{other}`"),
            })
        }
    };
    let (mut parent, mut child) = (None, None);
    let mut origin = Pose::identity();
    let mut axis = Vec3::x();
    let mut limits = None;
    for c in node.children().filter(|n| n.is_element()) {
        match c.tag_name().name() {
            "parent" => parent = Some(required_attr(doc, c, "link")?.to_string()),
            "child" => child = Some(required_attr(doc, c, "link")?.to_string()),
            "origin" => {
                let xyz = parse_floats(doc, c, "xyz", [0.0; 3])?;
                let rpy = parse_floats(doc, c, "rpy", [0.0; 3])?;
                origin = Pose::new(Rot3::from_rpy(rpy[0], rpy[1], rpy[2]), Vec3::from(xyz));
            }
            "axis" => axis = Vec3::from(parse_floats(doc, c, "xyz", [1.0, 0.0, 0.0])?),
            "limit" => {
                let lower: f64 = required_attr(doc, c, "lower")?.parse().map_err(|e| Error::ChainParse {
                    line: line_of(doc, c),
                    msg: format!("limit lower: {e}"),
                })?;
                let upper: f64 = required_attr(doc, c, "upper")?.parse().map_err(|e| Error::ChainParse {
                    line: line_of(doc, c),
                    msg: format!("limit upper: {e}"),
                })?;
                limits = Some((lower, upper));
            }
            other => warnings.push(format!("line {}: ignored <{other}> in joint `{name}`", line_of(doc, c))),
        }
    }
    let parent = parent.ok_or_else(|| Error::ChainParse {
        line,
        msg: format!("joint `{name}` has no <parent>"),
    })?;
    let child = child.ok_or_else(|| Error::ChainParse {
        line,
        msg: format!("joint `{name}` has no <child>"),
    })?;
    let joint = match kind {
        JointKind::Fixed => Joint::fixed(&name, origin),
        _ => {
            let (lower, upper) = limits.ok_or_else(|| Error::ChainParse {
                line,
                msg: format!("movable joint `{name}` has no <limit>"),
            })?;
            if !(lower <= upper) {
                return Err(Error::ChainParse {
                    line,
                    msg: format!("joint `{name}`: lower limit exceeds upper"),
                });
            }
            let axis = axis.try_normalize(1e-12).ok_or_else(|| Error::ChainParse {
                line,
                msg: format!("joint `{name}` has a zero axis"),
            })?;
            Joint {
                name: name.clone(),
                kind,
                origin,
                axis,
                lower,
                upper,
            }
        }
    };
    Ok(ParsedJoint {
        joint,
        parent,
        child,
        line,
    })
}

/// Parses the chain between `root` and `ee` and folds its fixed joints.
pub fn parse_chain(document: &str, root: &str, ee: &str) -> Result<KinematicChain> {
    let (name, path, warnings) = parse_chain_path(document, root, ee)?;
    let mut chain = KinematicChain::from_joints(&name, &path)?;
    chain.warnings = warnings;
    Ok(chain)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_JOINT: &str = r#"<robot name="one">
  <link name="base"/>
  <link name="tip"/>
  <joint name="j1" type="revolute">
    <parent link="base"/>
    <child link="tip"/>
    <origin xyz="0 0 0.1" rpy="0 0 0"/>
    <axis xyz="0 0 1"/>
    <limit lower="-1.5" upper="1.5" effort="10" velocity="1"/>
  </joint>
</robot>"#;

    #[test]
    fn minimal_document() {
        let c = parse_chain(ONE_JOINT, "base", "tip").unwrap();
        assert_eq!(c.dof(), 1);
        assert_eq!(c.joints[0].axis, Vec3::z());
        assert_eq!(c.joints[0].origin.trans, Vec3::new(0.0, 0.0, 0.1));
        assert_eq!(c.name, "one");
    }

    #[test]
    fn missing_limit_is_an_error() {
        let doc = ONE_JOINT.replace(r#"<limit lower="-1.5" upper="1.5" effort="10" velocity="1"/>"#, "");
        let err = parse_chain(&doc, "base", "tip").unwrap_err();
        assert!(matches!(err, Error::ChainParse { line: 4, .. }), "{err}");
    }

    #[test]
    fn malformed_xml_reports_line() {
        let doc = "<robot name=\"x\">\n<link name=\"a\">\n</robot>";
        match parse_chain(doc, "a", "a").unwrap_err() {
            Error::ChainParse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn branching_and_missing_paths() {
        let doc = r#"<robot name="b">
  <link name="a"/><link name="b"/><link name="c"/>
  <joint name="j1" type="fixed"><parent link="a"/><child link="c"/></joint>
  <joint name="j2" type="fixed"><parent link="b"/><child link="c"/></joint>
</robot>"#;
        let err = parse_chain(doc, "a", "c").unwrap_err();
        assert!(err.to_string().contains("branching"), "{err}");
        assert!(parse_chain(doc, "b", "a").is_err());
        assert!(parse_chain(doc, "a", "zzz").is_err());
    }

    #[test]
    fn extra_elements_warn() {
        let doc = ONE_JOINT.replace("<link name=\"tip\"/>", "<link name=\"tip\"/><material name=\"red\"/>");
        let c = parse_chain(&doc, "base", "tip").unwrap();
        assert_eq!(c.warnings.len(), 1);
    }

    #[test]
    fn off_path_branches_are_ignored() {
        let doc = ONE_JOINT.replace(
            "</robot>",
            r#"<link name="finger"/>
  <joint name="f" type="prismatic"><parent link="tip"/><child link="finger"/><limit lower="0" upper="0.04"/></joint>
</robot>"#,
        );
        assert_eq!(parse_chain(&doc, "base", "tip").unwrap().dof(), 1);
        assert_eq!(parse_chain(&doc, "base", "finger").unwrap().dof(), 2);
    }

    #[test]
    fn check_limits_reports_joint() {
        let c = parse_chain(ONE_JOINT, "base", "tip").unwrap();
        assert!(matches!(c.check_limits(&JointConfig(vec![2.0])), Err(Error::OutOfLimits { .. })));
        assert!(c.check_limits(&JointConfig(vec![1.5])).is_ok());
        assert!(c.check_limits(&JointConfig(vec![])).is_err());
    }
}
