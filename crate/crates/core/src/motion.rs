//! Motion data model, the native JSON format, forward kinematics and
//! rotation-representation conversions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::autodiff::Scalar;
use crate::error::{Error, Result};
use crate::math::{self, lift3, Mat3, Vec3};
use crate::skeleton::{Joint, Role, Skeleton};

/// Unit quaternion stored as `[w, x, y, z]`.
pub type Quat = [f64; 4];

pub const IDENTITY_QUAT: Quat = [1.0, 0.0, 0.0, 0.0];

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub root_translation: [f64; 3],
    /// Local joint rotations, one per skeleton joint.
    pub rotations: Vec<Quat>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Motion {
    skeleton: Skeleton,
    fps: f64,
    frames: Vec<Frame>,
}

impl Motion {
    pub fn new(skeleton: Skeleton, fps: f64, frames: Vec<Frame>) -> Result<Self> {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::Motion(format!("fps must be positive, got {fps}")));
        }
        if frames.len() < 2 {
            return Err(Error::Motion(format!("need at least 2 frames, got {}", frames.len())));
        }
        for (t, f) in frames.iter().enumerate() {
            if f.rotations.len() != skeleton.len() {
                return Err(Error::Motion(format!(
                    "frame {t} has {} rotations for {} joints",
                    f.rotations.len(),
                    skeleton.len()
                )));
            }
            if f.root_translation.iter().any(|v| !v.is_finite()) {
                return Err(Error::Motion(format!("frame {t} has a non-finite root translation")));
            }
            for (j, q) in f.rotations.iter().enumerate() {
                let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
                if !n.is_finite() || (n - 1.0).abs() > 1e-6 {
                    return Err(Error::Motion(format!(
                        "frame {t} joint {j} quaternion norm {n} is not unit"
                    )));
                }
            }
        }
        Ok(Self { skeleton, fps, frames })
    }

    pub fn skeleton(&self) -> &Skeleton {
        &self.skeleton
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    /// Same skeleton and timing with new frame data.
    pub fn with_frames(&self, frames: Vec<Frame>) -> Result<Self> {
        Motion::new(self.skeleton.clone(), self.fps, frames)
    }

    /// Local rotation matrices of one frame.
    pub fn frame_matrices(&self, t: usize) -> Vec<[[f64; 3]; 3]> {
        self.frames[t].rotations.iter().map(quat_to_matrix).collect()
    }
}

/// World joint positions per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTrajectories {
    pub positions: Vec<Vec<[f64; 3]>>,
    /// Whether the root translation was zeroed.
    pub local: bool,
}

impl JointTrajectories {
    pub fn num_frames(&self) -> usize {
        self.positions.len()
    }
}

pub fn quat_to_matrix(q: &Quat) -> [[f64; 3]; 3] {
    let [w, x, y, z] = *q;
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

/// Closest unit quaternion to a rotation matrix, with `w >= 0`.
pub fn matrix_to_quat(m: &[[f64; 3]; 3]) -> Quat {
    let rot = nalgebra::Rotation3::from_matrix_unchecked(nalgebra::Matrix3::from_fn(|i, j| m[i][j]));
    let q = nalgebra::UnitQuaternion::from_rotation_matrix(&rot);
    let s = if q.w < 0.0 { -1.0 } else { 1.0 };
    [s * q.w, s * q.i, s * q.j, s * q.k]
}

pub fn quat_mul(a: &Quat, b: &Quat) -> Quat {
    let [aw, ax, ay, az] = *a;
    let [bw, bx, by, bz] = *b;
    [
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ]
}

pub fn quat_from_axis_angle(axis: [f64; 3], angle: f64) -> Quat {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let (s, c) = (angle / 2.0).sin_cos();
    [c, s * axis[0] / n, s * axis[1] / n, s * axis[2] / n]
}

/// Positions of all joints for one frame given local rotation matrices.
pub(crate) fn fk_frame<S: Scalar>(skel: &Skeleton, root_t: Vec3<S>, local: &[Mat3<S>]) -> Vec<Vec3<S>> {
    let joints = skel.joints();
    let mut global: Vec<Mat3<S>> = Vec::with_capacity(joints.len());
    let mut pos: Vec<Vec3<S>> = Vec::with_capacity(joints.len());
    for (j, joint) in joints.iter().enumerate() {
        let offset = lift3::<S>(joint.offset);
        match joint.parent {
            None => {
                pos.push(math::add(root_t, offset));
                global.push(local[j]);
            }
            Some(p) => {
                pos.push(math::add(pos[p], math::mat_vec(&global[p], offset)));
                global.push(math::mat_mul(&global[p], &local[j]));
            }
        }
    }
    pos
}

pub fn forward_kinematics(m: &Motion, zero_root_translation: bool) -> JointTrajectories {
    let positions = (0..m.num_frames())
        .map(|t| {
            let root = if zero_root_translation {
                [0.0; 3]
            } else {
                m.frames[t].root_translation
            };
            fk_frame::<f64>(&m.skeleton, root, &m.frame_matrices(t))
        })
        .collect();
    JointTrajectories {
        positions,
        local: zero_root_translation,
    }
}

/// First two columns of a rotation matrix.
pub fn matrix_to_rot6d(m: &[[f64; 3]; 3]) -> [f64; 6] {
    [m[0][0], m[1][0], m[2][0], m[0][1], m[1][1], m[2][1]]
}

/// Gram-Schmidt orthonormalization of a 6D rotation back to a matrix.
pub fn rot6d_to_matrix(r: &[f64; 6]) -> [[f64; 3]; 3] {
    let a: [f64; 3] = [r[0], r[1], r[2]];
    let b: [f64; 3] = [r[3], r[4], r[5]];
    let c0 = math::scale(a, 1.0 / math::norm(a));
    let b_ortho = math::sub(b, math::scale(c0, math::dot(c0, b)));
    let c1 = math::scale(b_ortho, 1.0 / math::norm(b_ortho));
    let c2 = math::cross(c0, c1);
    [[c0[0], c1[0], c2[0]], [c0[1], c1[1], c2[1]], [c0[2], c1[2], c2[2]]]
}

/// `T x J x 6` array of 6D rotations.
pub fn to_rot6d(m: &Motion) -> Vec<Vec<[f64; 6]>> {
    m.frames
        .iter()
        .map(|f| f.rotations.iter().map(|q| matrix_to_rot6d(&quat_to_matrix(q))).collect())
        .collect()
}

#[derive(Serialize, Deserialize)]
struct MotionDoc {
    fps: f64,
    skeleton: SkeletonDoc,
    frames: Vec<FrameDoc>,
}

#[derive(Serialize, Deserialize)]
struct SkeletonDoc {
    joints: Vec<JointDoc>,
    roles: BTreeMap<Role, String>,
}

#[derive(Serialize, Deserialize)]
struct JointDoc {
    name: String,
    parent: Option<usize>,
    offset: [f64; 3],
}

#[derive(Serialize, Deserialize)]
struct FrameDoc {
    root_t: [f64; 3],
    rot: Vec<[f64; 4]>,
}

impl Serialize for Motion {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_doc().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Motion {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = MotionDoc::deserialize(d)?;
        Motion::from_doc(doc).map_err(serde::de::Error::custom)
    }
}

impl Motion {
    fn to_doc(&self) -> MotionDoc {
        let joints = self.skeleton.joints();
        MotionDoc {
            fps: self.fps,
            skeleton: SkeletonDoc {
                joints: joints
                    .iter()
                    .map(|j| JointDoc {
                        name: j.name.clone(),
                        parent: j.parent,
                        offset: j.offset,
                    })
                    .collect(),
                roles: self
                    .skeleton
                    .roles()
                    .iter()
                    .map(|(r, &i)| (*r, joints[i].name.clone()))
                    .collect(),
            },
            frames: self
                .frames
                .iter()
                .map(|f| FrameDoc {
                    root_t: f.root_translation,
                    rot: f.rotations.clone(),
                })
                .collect(),
        }
    }

    fn from_doc(doc: MotionDoc) -> Result<Self> {
        let joints: Vec<Joint> = doc
            .skeleton
            .joints
            .into_iter()
            .map(|j| Joint {
                name: j.name,
                parent: j.parent,
                offset: j.offset,
            })
            .collect();
        let mut roles = BTreeMap::new();
        for (role, name) in doc.skeleton.roles {
            let idx = joints
                .iter()
                .position(|j| j.name == name)
                .ok_or_else(|| Error::Skeleton(format!("role {role} names unknown joint {name:?}")))?;
            roles.insert(role, idx);
        }
        let skeleton = Skeleton::new(joints, roles)?;
        let frames = doc
            .frames
            .into_iter()
            .map(|f| Frame {
                root_translation: f.root_t,
                rotations: f.rot,
            })
            .collect();
        Motion::new(skeleton, doc.fps, frames)
    }
}

pub fn parse_motion_json(text: &str) -> Result<Motion> {
    let doc: MotionDoc = serde_json::from_str(text)?;
    Motion::from_doc(doc)
}

pub fn serialize_motion_json(m: &Motion) -> String {
    serde_json::to_string(&m.to_doc()).expect("motion documents always serialize")
}
