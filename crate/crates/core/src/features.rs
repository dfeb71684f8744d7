//! Egocentric reference frames and the six body-part orientation features.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::autodiff::Scalar;
use crate::error::{Error, Result};
use crate::math::{self, Mat3, Vec3};
use crate::motion::{forward_kinematics, JointTrajectories, Motion};
use crate::skeleton::{RoleJoints, Skeleton};

/// Below this norm a direction is considered degenerate.
pub const DEGENERATE_NORM: f64 = 1e-6;

/// Body parts in staff column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Part {
    #[serde(rename = "RT")]
    Root,
    #[serde(rename = "LA")]
    LeftArm,
    #[serde(rename = "LL")]
    LeftLeg,
    #[serde(rename = "RL")]
    RightLeg,
    #[serde(rename = "RA")]
    RightArm,
    #[serde(rename = "SP")]
    Spine,
}

impl Part {
    pub const ALL: [Part; 6] = [
        Part::Root,
        Part::LeftArm,
        Part::LeftLeg,
        Part::RightLeg,
        Part::RightArm,
        Part::Spine,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn code(self) -> &'static str {
        match self {
            Part::Root => "RT",
            Part::LeftArm => "LA",
            Part::LeftLeg => "LL",
            Part::RightLeg => "RL",
            Part::RightArm => "RA",
            Part::Spine => "SP",
        }
    }

    pub fn is_root(self) -> bool {
        self == Part::Root
    }

    /// `(end, anchor)` joints of a limb part; `None` for the root.
    pub fn joint_pair(self, roles: &RoleJoints) -> Option<(usize, usize)> {
        match self {
            Part::Root => None,
            Part::LeftArm => Some((roles.left_wrist, roles.left_shoulder)),
            Part::RightArm => Some((roles.right_wrist, roles.right_shoulder)),
            Part::LeftLeg => Some((roles.left_ankle, roles.left_hip)),
            Part::RightLeg => Some((roles.right_ankle, roles.right_hip)),
            Part::Spine => Some((roles.head, roles.pelvis)),
        }
    }
}

impl fmt::Display for Part {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Part {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Part::ALL
            .into_iter()
            .find(|p| p.code() == s)
            .ok_or_else(|| Error::UnknownPart(s.to_string()))
    }
}

/// Per-frame `[right, forward, up]` rows in world coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceFrames {
    pub rows: Vec<[[f64; 3]; 3]>,
}

const UP: [f64; 3] = [0.0, 0.0, 1.0];

/// Frame from the shoulder and hip lines, or `None` when the horizontal
/// across vector vanishes.
pub(crate) fn reference_frame<S: Scalar>(pos: &[Vec3<S>], roles: &RoleJoints) -> Option<Mat3<S>> {
    let hips = math::sub(pos[roles.right_hip], pos[roles.left_hip]);
    let shoulders = math::sub(pos[roles.right_shoulder], pos[roles.left_shoulder]);
    let across = math::add(hips, shoulders);
    let horizontal = [across[0], across[1], S::zero()];
    let n = math::norm(horizontal);
    if !(n.value() >= DEGENERATE_NORM) {
        return None;
    }
    let across = math::scale(horizontal, S::constant(1.0) / n);
    let up = math::lift3::<S>(UP);
    // up x across points away from the back when across runs left to right.
    let forward = math::cross(up, across);
    let right = math::cross(forward, up);
    Some([right, forward, up])
}

#[cfg(test)]
fn fallback_frame() -> [[f64; 3]; 3] {
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], UP]
}

/// Reference frames with hold-last-valid for degenerate frames.
///
/// Errors only when the very first frame is degenerate.
pub fn reference_frames(traj: &JointTrajectories, skel: &Skeleton) -> Result<ReferenceFrames> {
    let roles = skel.require_roles()?;
    let mut rows: Vec<[[f64; 3]; 3]> = Vec::with_capacity(traj.num_frames());
    for (t, pos) in traj.positions.iter().enumerate() {
        match reference_frame::<f64>(pos, &roles) {
            Some(r) => rows.push(r),
            None if t > 0 => rows.push(rows[t - 1]),
            None => {
                return Err(Error::Motion(
                    "frame 0 has coincident hips and shoulders; cannot build a reference frame".into(),
                ))
            }
        }
    }
    Ok(ReferenceFrames { rows })
}

/// Egocentric displacement of `end` from `anchor` per frame: components
/// along the frame's right, forward and up rows.
pub fn prpp(traj: &JointTrajectories, frames: &ReferenceFrames, end: usize, anchor: usize) -> Vec<[f64; 3]> {
    traj.positions
        .iter()
        .zip(&frames.rows)
        .map(|(pos, r)| math::mat_vec(r, math::sub(pos[end], pos[anchor])))
        .collect()
}

/// Feature vector of one part for one frame given its reference frame.
pub(crate) fn part_feature<S: Scalar>(part: Part, pos: &[Vec3<S>], frame: &Mat3<S>, roles: &RoleJoints) -> Vec3<S> {
    match part.joint_pair(roles) {
        None => frame[1],
        Some((end, anchor)) => math::mat_vec(frame, math::sub(pos[end], pos[anchor])),
    }
}

/// `T x 6 x 3` orientation features in [`Part::ALL`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientationFeatures {
    pub o: Vec<[[f64; 3]; 6]>,
    /// Frames whose feature norm fell below [`DEGENERATE_NORM`].
    pub degenerate: Vec<[bool; 6]>,
}

impl OrientationFeatures {
    pub fn num_frames(&self) -> usize {
        self.o.len()
    }

    pub fn part(&self, part: Part) -> impl Iterator<Item = [f64; 3]> + '_ {
        self.o.iter().map(move |row| row[part.index()])
    }

    /// Unit directions; degenerate frames hold the last valid direction,
    /// with `(0, 1, 0)` before any valid one.
    pub fn unit_directions(&self) -> Vec<[[f64; 3]; 6]> {
        let mut held = [[0.0, 1.0, 0.0]; 6];
        self.o
            .iter()
            .map(|row| {
                for (p, v) in row.iter().enumerate() {
                    let n = math::norm(*v);
                    if n >= DEGENERATE_NORM && n.is_finite() {
                        held[p] = math::scale(*v, 1.0 / n);
                    }
                }
                held
            })
            .collect()
    }
}

pub fn extract_orientation_features(m: &Motion) -> Result<OrientationFeatures> {
    let roles = m.skeleton().require_roles()?;
    let traj = forward_kinematics(m, true);
    let frames = reference_frames(&traj, m.skeleton())?;
    let mut o = Vec::with_capacity(m.num_frames());
    let mut degenerate = Vec::with_capacity(m.num_frames());
    for (pos, r) in traj.positions.iter().zip(&frames.rows) {
        let mut row = [[0.0; 3]; 6];
        let mut flags = [false; 6];
        for part in Part::ALL {
            let v = part_feature::<f64>(part, pos, r, &roles);
            flags[part.index()] = math::norm(v) < DEGENERATE_NORM;
            row[part.index()] = v;
        }
        o.push(row);
        degenerate.push(flags);
    }
    Ok(OrientationFeatures { o, degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::{quat_from_axis_angle, quat_mul, Frame};
    use crate::synth;

    fn close(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
        (0..3).all(|k| (a[k] - b[k]).abs() <= tol)
    }

    fn yawed(m: &Motion, yaw: f64) -> Motion {
        let q = quat_from_axis_angle([0.0, 0.0, 1.0], yaw);
        let frames = m
            .frames()
            .iter()
            .map(|f| {
                let mut f = f.clone();
                f.rotations[0] = quat_mul(&q, &f.rotations[0]);
                f
            })
            .collect();
        m.with_frames(frames).unwrap()
    }

    #[test]
    fn t_pose_frame_is_identity() {
        let m = synth::static_motion(&synth::t_pose(), 4);
        let traj = forward_kinematics(&m, true);
        let f = reference_frames(&traj, m.skeleton()).unwrap();
        let want = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        for k in 0..3 {
            assert!(close(f.rows[0][k], want[k], 1e-12), "{:?}", f.rows[0]);
        }
    }

    #[test]
    fn yawed_t_pose_frame_matches_rotated_construction() {
        // Brute force: rotate the T-pose joint positions by +90 degrees yaw,
        // then rebuild the across vector by hand.
        let m = synth::static_motion(&synth::t_pose(), 2);
        let traj = forward_kinematics(&yawed(&m, std::f64::consts::FRAC_PI_2), true);
        let f = reference_frames(&traj, m.skeleton()).unwrap().rows[0];
        // Rz(90): right (1,0,0) -> (0,1,0), forward (0,1,0) -> (-1,0,0).
        assert!(close(f[0], [0.0, 1.0, 0.0], 1e-12), "{f:?}");
        assert!(close(f[1], [-1.0, 0.0, 0.0], 1e-12), "{f:?}");
        assert!(close(f[2], [0.0, 0.0, 1.0], 0.0));
    }

    #[test]
    fn degenerate_frame_holds_previous() {
        let m = synth::static_motion(&synth::t_pose(), 6);
        let roles = m.skeleton().require_roles().unwrap();
        let mut traj = forward_kinematics(&m, true);
        let p = &mut traj.positions[5];
        let centre = p[roles.pelvis];
        for j in [roles.left_hip, roles.right_hip, roles.left_shoulder, roles.right_shoulder] {
            p[j] = centre;
        }
        let f = reference_frames(&traj, m.skeleton()).unwrap();
        assert_eq!(f.rows[5], f.rows[4]);
        traj.positions[0] = traj.positions[5].clone();
        assert!(reference_frames(&traj, m.skeleton()).is_err());
    }

    #[test]
    fn prpp_examples() {
        let traj = JointTrajectories {
            positions: vec![vec![[0.0; 3], [0.3, 0.1, 0.5]], vec![[0.0; 3], [1.0, 0.0, 0.0]]],
            local: true,
        };
        let frames = ReferenceFrames {
            rows: vec![fallback_frame(), [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], UP]],
        };
        let o = prpp(&traj, &frames, 1, 0);
        assert!(close(o[0], [0.3, 0.1, 0.5], 1e-15));
        assert!(close(o[1], [0.0, 1.0, 0.0], 1e-15));
        assert!(prpp(&traj, &frames, 1, 1).iter().all(|v| *v == [0.0; 3]));
    }

    #[test]
    fn t_pose_features() {
        let o = extract_orientation_features(&synth::static_motion(&synth::t_pose(), 3)).unwrap();
        assert!(close(o.o[0][Part::Root.index()], [0.0, 1.0, 0.0], 1e-12));
        let la = o.o[0][Part::LeftArm.index()];
        assert!(la[0] < -0.4 && la[1].abs() < 1e-12 && la[2].abs() < 1e-12, "{la:?}");
        let ra = o.o[0][Part::RightArm.index()];
        assert!(ra[0] > 0.4, "{ra:?}");
    }

    #[test]
    fn hanging_arm_points_down() {
        let o = extract_orientation_features(&synth::static_motion(&synth::rest_pose(), 3)).unwrap();
        let la = o.o[0][Part::LeftArm.index()];
        let len = synth::ARM_LENGTH;
        assert!((la[2] + len).abs() < 1e-9 && la[0].abs() < 1e-9 && la[1].abs() < 1e-9, "{la:?}");
    }

    #[test]
    fn spinning_root_traces_unit_circle() {
        let base = synth::rest_pose();
        let frames: Vec<Frame> = (0..16)
            .map(|t| {
                let mut f = base.clone();
                let q = quat_from_axis_angle([0.0, 0.0, 1.0], t as f64 * std::f64::consts::TAU / 16.0);
                f.rotations[0] = quat_mul(&q, &f.rotations[0]);
                f
            })
            .collect();
        let m = Motion::new(synth::humanoid_skeleton(), 30.0, frames).unwrap();
        let o = extract_orientation_features(&m).unwrap();
        for (t, row) in o.o.iter().enumerate() {
            let rt = row[Part::Root.index()];
            let a = t as f64 * std::f64::consts::TAU / 16.0;
            assert!(close(rt, [-a.sin(), a.cos(), 0.0], 1e-12), "frame {t}: {rt:?}");
        }
    }

    #[test]
    fn limb_features_ignore_heading_and_translation() {
        let m = synth::arm_swing_motion(40);
        let base = extract_orientation_features(&m).unwrap();
        for yaw in [0.4, -2.0, 3.0] {
            let o = extract_orientation_features(&yawed(&m, yaw)).unwrap();
            for (a, b) in base.o.iter().zip(&o.o) {
                for p in 1..6 {
                    assert!(close(a[p], b[p], 1e-9));
                }
            }
        }
        let shifted: Vec<Frame> = m
            .frames()
            .iter()
            .map(|f| Frame {
                root_translation: [f.root_translation[0] + 5.0, f.root_translation[1] - 1.0, 2.0],
                rotations: f.rotations.clone(),
            })
            .collect();
        let o = extract_orientation_features(&m.with_frames(shifted).unwrap()).unwrap();
        assert_eq!(o, base);
    }

    #[test]
    fn part_codes_round_trip() {
        for p in Part::ALL {
            assert_eq!(p.code().parse::<Part>().unwrap(), p);
        }
        let msg = "XX".parse::<Part>().unwrap_err().to_string();
        assert!(msg.contains("RT, LA, LL, RL, RA, SP"));
    }

    #[test]
    fn unit_directions_hold_last_valid() {
        let f = OrientationFeatures {
            o: vec![[[0.0; 3]; 6], [[0.0, 0.0, 2.0]; 6], [[0.0; 3]; 6]],
            degenerate: vec![[true; 6], [false; 6], [true; 6]],
        };
        let d = f.unit_directions();
        assert_eq!(d[0][1], [0.0, 1.0, 0.0]);
        assert_eq!(d[1][1], [0.0, 0.0, 1.0]);
        assert_eq!(d[2][1], [0.0, 0.0, 1.0]);
    }
}
