//! Skeleton definition and the named body-part roles.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Named joints the orientation features are built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    LeftShoulder,
    RightShoulder,
    LeftWrist,
    RightWrist,
    LeftHip,
    RightHip,
    LeftAnkle,
    RightAnkle,
    Pelvis,
    Head,
}

impl Role {
    pub const ALL: [Role; 10] = [
        Role::LeftShoulder,
        Role::RightShoulder,
        Role::LeftWrist,
        Role::RightWrist,
        Role::LeftHip,
        Role::RightHip,
        Role::LeftAnkle,
        Role::RightAnkle,
        Role::Pelvis,
        Role::Head,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::LeftShoulder => "left_shoulder",
            Role::RightShoulder => "right_shoulder",
            Role::LeftWrist => "left_wrist",
            Role::RightWrist => "right_wrist",
            Role::LeftHip => "left_hip",
            Role::RightHip => "right_hip",
            Role::LeftAnkle => "left_ankle",
            Role::RightAnkle => "right_ankle",
            Role::Pelvis => "pelvis",
            Role::Head => "head",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub name: String,
    pub parent: Option<usize>,
    /// Offset from the parent joint in meters, in the parent's frame.
    pub offset: [f64; 3],
}

/// Joints in topological order plus the role map.
///
/// Roles may be partial for raw ingested data; [`Skeleton::require_roles`]
/// enforces the full set before feature extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    joints: Vec<Joint>,
    roles: BTreeMap<Role, usize>,
}

impl Skeleton {
    pub fn new(joints: Vec<Joint>, roles: BTreeMap<Role, usize>) -> Result<Self> {
        if joints.is_empty() {
            return Err(Error::Skeleton("no joints".into()));
        }
        let mut roots = 0;
        for (i, j) in joints.iter().enumerate() {
            match j.parent {
                None => roots += 1,
                Some(p) if p >= i => {
                    return Err(Error::Skeleton(format!(
                        "joint {:?} (index {i}) has parent {p}; parents must precede children",
                        j.name
                    )))
                }
                Some(_) => {}
            }
            if j.offset.iter().any(|v| !v.is_finite()) {
                return Err(Error::Skeleton(format!("joint {:?} has a non-finite offset", j.name)));
            }
        }
        if roots != 1 || joints[0].parent.is_some() {
            return Err(Error::Skeleton(format!(
                "expected exactly one root joint at index 0, found {roots}"
            )));
        }
        let mut seen = BTreeMap::new();
        for (&role, &idx) in &roles {
            if idx >= joints.len() {
                return Err(Error::Skeleton(format!("role {role} points at missing joint {idx}")));
            }
            if let Some(other) = seen.insert(idx, role) {
                return Err(Error::Skeleton(format!(
                    "roles {other} and {role} share joint {:?}",
                    joints[idx].name
                )));
            }
        }
        Ok(Self { joints, roles })
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    pub fn roles(&self) -> &BTreeMap<Role, usize> {
        &self.roles
    }

    pub fn role(&self, role: Role) -> Option<usize> {
        self.roles.get(&role).copied()
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    /// Resolves all ten roles or reports which are missing.
    pub fn require_roles(&self) -> Result<RoleJoints> {
        let missing: Vec<_> = Role::ALL
            .iter()
            .filter(|r| !self.roles.contains_key(r))
            .map(|r| r.as_str())
            .collect();
        if !missing.is_empty() {
            return Err(Error::Skeleton(format!("missing roles: {}", missing.join(", "))));
        }
        let r = |role| self.roles[&role];
        Ok(RoleJoints {
            left_shoulder: r(Role::LeftShoulder),
            right_shoulder: r(Role::RightShoulder),
            left_wrist: r(Role::LeftWrist),
            right_wrist: r(Role::RightWrist),
            left_hip: r(Role::LeftHip),
            right_hip: r(Role::RightHip),
            left_ankle: r(Role::LeftAnkle),
            right_ankle: r(Role::RightAnkle),
            pelvis: r(Role::Pelvis),
            head: r(Role::Head),
        })
    }

    /// Fills in roles from conventional joint names (Mixamo, CMU, SMPL-style).
    pub fn infer_roles(&mut self) {
        for role in Role::ALL {
            if self.roles.contains_key(&role) {
                continue;
            }
            let taken: Vec<usize> = self.roles.values().copied().collect();
            let found = role_candidates(role).iter().find_map(|cand| {
                self.joints
                    .iter()
                    .enumerate()
                    .find(|(i, j)| !taken.contains(i) && normalize_name(&j.name) == *cand)
                    .map(|(i, _)| i)
            });
            if let Some(i) = found {
                self.roles.insert(role, i);
            }
        }
    }
}

/// Fully resolved role indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoleJoints {
    pub left_shoulder: usize,
    pub right_shoulder: usize,
    pub left_wrist: usize,
    pub right_wrist: usize,
    pub left_hip: usize,
    pub right_hip: usize,
    pub left_ankle: usize,
    pub right_ankle: usize,
    pub pelvis: usize,
    pub head: usize,
}

fn normalize_name(name: &str) -> String {
    let lower: String = name
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect();
    lower
        .strip_prefix("mixamorig")
        .map(str::to_owned)
        .unwrap_or(lower)
}

fn role_candidates(role: Role) -> &'static [&'static str] {
    match role {
        Role::Pelvis => &["hips", "pelvis", "hip", "root"],
        Role::Head => &["head", "headtop"],
        Role::LeftShoulder => &["leftarm", "leftupperarm", "lshoulder", "leftshoulder", "lupperarm", "lhumerus"],
        Role::RightShoulder => &["rightarm", "rightupperarm", "rshoulder", "rightshoulder", "rupperarm", "rhumerus"],
        Role::LeftWrist => &["lefthand", "leftwrist", "lwrist", "lhand"],
        Role::RightWrist => &["righthand", "rightwrist", "rwrist", "rhand"],
        Role::LeftHip => &["leftupleg", "leftthigh", "lhip", "leftupperleg", "lfemur", "lthigh"],
        Role::RightHip => &["rightupleg", "rightthigh", "rhip", "rightupperleg", "rfemur", "rthigh"],
        Role::LeftAnkle => &["leftfoot", "leftankle", "lankle", "lfoot"],
        Role::RightAnkle => &["rightfoot", "rightankle", "rankle", "rfoot"],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn j(name: &str, parent: Option<usize>) -> Joint {
        Joint {
            name: name.into(),
            parent,
            offset: [0.0, 0.0, 1.0],
        }
    }

    #[test]
    fn rejects_parent_after_child() {
        let err = Skeleton::new(vec![j("a", None), j("b", Some(2)), j("c", Some(0))], BTreeMap::new());
        assert!(err.is_err());
    }

    #[test]
    fn rejects_two_roots() {
        assert!(Skeleton::new(vec![j("a", None), j("b", None)], BTreeMap::new()).is_err());
    }

    #[test]
    fn rejects_shared_role_joint() {
        let roles = BTreeMap::from([(Role::Head, 1), (Role::Pelvis, 1)]);
        assert!(Skeleton::new(vec![j("a", None), j("b", Some(0))], roles).is_err());
    }

    #[test]
    fn infers_mixamo_names() {
        let names = [
            "mixamorig:Hips", "LeftUpLeg", "LeftFoot", "RightUpLeg", "RightFoot", "Spine",
            "Head", "LeftArm", "LeftHand", "RightArm", "RightHand",
        ];
        let joints = names
            .iter()
            .enumerate()
            .map(|(i, n)| j(n, if i == 0 { None } else { Some(0) }))
            .collect();
        let mut s = Skeleton::new(joints, BTreeMap::new()).unwrap();
        s.infer_roles();
        let r = s.require_roles().unwrap();
        assert_eq!(r.pelvis, 0);
        assert_eq!(r.left_wrist, 8);
        assert_eq!(r.right_ankle, 4);
    }

    #[test]
    fn missing_roles_are_listed() {
        let s = Skeleton::new(vec![j("a", None)], BTreeMap::new()).unwrap();
        let msg = s.require_roles().unwrap_err().to_string();
        assert!(msg.contains("left_wrist") && msg.contains("head"));
    }
}
