//! Synthetic humanoid and motion fixtures.
//!
//! World convention: x right, y forward, z up. The character faces +y, so
//! its left side is on -x.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::math::exp_map;
use crate::motion::{matrix_to_quat, quat_from_axis_angle, quat_mul, quat_to_matrix, Frame, Motion, Quat, IDENTITY_QUAT};
use crate::skeleton::{Joint, Role, Skeleton};
use crate::script::SosScript;

pub const PELVIS: usize = 0;
pub const SPINE: usize = 1;
pub const CHEST: usize = 2;
pub const NECK: usize = 3;
pub const HEAD: usize = 4;
pub const L_SHOULDER: usize = 5;
pub const L_ELBOW: usize = 6;
pub const L_WRIST: usize = 7;
pub const R_SHOULDER: usize = 8;
pub const R_ELBOW: usize = 9;
pub const R_WRIST: usize = 10;
pub const L_HIP: usize = 11;
pub const L_KNEE: usize = 12;
pub const L_ANKLE: usize = 13;
pub const R_HIP: usize = 14;
pub const R_KNEE: usize = 15;
pub const R_ANKLE: usize = 16;

/// Shoulder-to-wrist distance of [`humanoid_skeleton`].
pub const ARM_LENGTH: f64 = 0.53;

pub const FPS: f64 = 30.0;

/// Seventeen-joint humanoid in T-pose rest configuration.
pub fn humanoid_skeleton() -> Skeleton {
    let spec: [(&str, Option<usize>, [f64; 3]); 17] = [
        ("pelvis", None, [0.0, 0.0, 0.95]),
        ("spine", Some(PELVIS), [0.0, 0.0, 0.12]),
        ("chest", Some(SPINE), [0.0, 0.0, 0.25]),
        ("neck", Some(CHEST), [0.0, 0.0, 0.20]),
        ("head", Some(NECK), [0.0, 0.0, 0.12]),
        ("l_shoulder", Some(CHEST), [-0.18, 0.0, 0.12]),
        ("l_elbow", Some(L_SHOULDER), [-0.28, 0.0, 0.0]),
        ("l_wrist", Some(L_ELBOW), [-0.25, 0.0, 0.0]),
        ("r_shoulder", Some(CHEST), [0.18, 0.0, 0.12]),
        ("r_elbow", Some(R_SHOULDER), [0.28, 0.0, 0.0]),
        ("r_wrist", Some(R_ELBOW), [0.25, 0.0, 0.0]),
        ("l_hip", Some(PELVIS), [-0.1, 0.0, -0.05]),
        ("l_knee", Some(L_HIP), [0.0, 0.0, -0.42]),
        ("l_ankle", Some(L_KNEE), [0.0, 0.0, -0.42]),
        ("r_hip", Some(PELVIS), [0.1, 0.0, -0.05]),
        ("r_knee", Some(R_HIP), [0.0, 0.0, -0.42]),
        ("r_ankle", Some(R_KNEE), [0.0, 0.0, -0.42]),
    ];
    let joints = spec
        .iter()
        .map(|(name, parent, offset)| Joint {
            name: (*name).into(),
            parent: *parent,
            offset: *offset,
        })
        .collect();
    let roles = BTreeMap::from([
        (Role::Pelvis, PELVIS),
        (Role::Head, HEAD),
        (Role::LeftShoulder, L_SHOULDER),
        (Role::LeftWrist, L_WRIST),
        (Role::RightShoulder, R_SHOULDER),
        (Role::RightWrist, R_WRIST),
        (Role::LeftHip, L_HIP),
        (Role::LeftAnkle, L_ANKLE),
        (Role::RightHip, R_HIP),
        (Role::RightAnkle, R_ANKLE),
    ]);
    Skeleton::new(joints, roles).expect("fixture skeleton is valid")
}

fn rx(a: f64) -> Quat {
    quat_from_axis_angle([1.0, 0.0, 0.0], a)
}

fn ry(a: f64) -> Quat {
    quat_from_axis_angle([0.0, 1.0, 0.0], a)
}

fn rz(a: f64) -> Quat {
    quat_from_axis_angle([0.0, 0.0, 1.0], a)
}

/// All joints at identity: arms straight out to the sides.
pub fn t_pose() -> Frame {
    Frame {
        root_translation: [0.0; 3],
        rotations: vec![IDENTITY_QUAT; 17],
    }
}

/// Arms hanging straight down.
pub fn rest_pose() -> Frame {
    let mut f = t_pose();
    f.rotations[L_SHOULDER] = ry(-PI / 2.0);
    f.rotations[R_SHOULDER] = ry(PI / 2.0);
    f
}

pub fn static_motion(pose: &Frame, frames: usize) -> Motion {
    Motion::new(humanoid_skeleton(), FPS, vec![pose.clone(); frames]).expect("fixture motion is valid")
}

/// Peak forward elevation of the swinging arm: the arm direction there is
/// `(0, 1/sqrt(10), 3/sqrt(10))`.
pub fn swing_peak_angle() -> f64 {
    PI - (1.0f64 / 3.0).atan()
}

/// Frame at which [`arm_swing_motion`] peaks.
pub const SWING_PEAK_FRAME: usize = 18;

/// Left arm swings forward and up from hanging, peaks at frame 18 and
/// returns by frame 36; everything else holds the rest pose.
pub fn arm_swing_motion(frames: usize) -> Motion {
    let peak = swing_peak_angle();
    let period = 2.0 * SWING_PEAK_FRAME as f64;
    let frames = (0..frames)
        .map(|t| {
            let mut f = rest_pose();
            let tf = t as f64;
            let phi = if tf < period {
                peak * (1.0 - (TAU * tf / period).cos()) / 2.0
            } else {
                0.0
            };
            f.rotations[L_SHOULDER] = quat_mul(&rx(phi), &ry(-PI / 2.0));
            f
        })
        .collect();
    Motion::new(humanoid_skeleton(), FPS, frames).expect("fixture motion is valid")
}

struct Wave {
    amp: f64,
    freq: f64,
    phase: f64,
    bias: f64,
}

impl Wave {
    fn random(rng: &mut ChaCha8Rng, amp: (f64, f64), cycles: (f64, f64), frames: usize, bias: f64) -> Self {
        Self {
            amp: rng.random_range(amp.0..amp.1),
            freq: TAU * rng.random_range(cycles.0..cycles.1) / frames as f64,
            phase: rng.random_range(0.0..TAU),
            bias,
        }
    }

    fn at(&self, t: usize) -> f64 {
        self.bias + self.amp * (self.freq * t as f64 + self.phase).sin()
    }
}

/// Smooth whole-body motion with every part moving; parameters drawn from
/// `seed`.
pub fn dance_motion(frames: usize, seed: u64) -> Motion {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = frames;
    let yaw = Wave::random(&mut rng, (0.6, 1.4), (0.5, 1.5), n, 0.0);
    let lean = Wave::random(&mut rng, (0.2, 0.5), (0.5, 2.0), n, 0.1);
    let side = Wave::random(&mut rng, (0.1, 0.4), (0.5, 2.0), n, 0.0);
    let la_lift = Wave::random(&mut rng, (0.8, 1.6), (1.0, 2.5), n, 0.3);
    let la_swing = Wave::random(&mut rng, (0.5, 1.4), (1.0, 2.5), n, 0.0);
    let ra_lift = Wave::random(&mut rng, (0.8, 1.6), (1.0, 2.5), n, -0.3);
    let ra_swing = Wave::random(&mut rng, (0.5, 1.4), (1.0, 2.5), n, 0.0);
    let elbow = Wave::random(&mut rng, (0.2, 0.6), (1.0, 3.0), n, 0.5);
    let ll = Wave::random(&mut rng, (0.4, 0.9), (1.0, 2.5), n, 0.0);
    let rl = Wave::random(&mut rng, (0.4, 0.9), (1.0, 2.5), n, 0.0);
    let l_abduct = Wave::random(&mut rng, (0.1, 0.5), (0.5, 2.0), n, 0.0);
    let knee = Wave::random(&mut rng, (0.2, 0.5), (1.0, 3.0), n, 0.5);
    let frames = (0..n)
        .map(|t| {
            let mut f = rest_pose();
            f.root_translation = [0.0, 0.01 * t as f64, 0.0];
            f.rotations[PELVIS] = rz(yaw.at(t));
            f.rotations[SPINE] = quat_mul(&rx(lean.at(t)), &ry(side.at(t)));
            f.rotations[L_SHOULDER] = quat_mul(&quat_mul(&rx(la_lift.at(t)), &rz(la_swing.at(t))), &ry(-PI / 2.0));
            f.rotations[R_SHOULDER] = quat_mul(&quat_mul(&rx(ra_lift.at(t)), &rz(ra_swing.at(t))), &ry(PI / 2.0));
            f.rotations[L_ELBOW] = rz(elbow.at(t));
            f.rotations[R_ELBOW] = rz(-elbow.at(t));
            f.rotations[L_HIP] = quat_mul(&rx(ll.at(t)), &ry(-l_abduct.at(t)));
            f.rotations[R_HIP] = rx(rl.at(t));
            f.rotations[L_KNEE] = rx(-knee.at(t).max(0.0));
            f.rotations[R_KNEE] = rx(-(knee.at(t + 7)).max(0.0));
            f
        })
        .collect();
    Motion::new(humanoid_skeleton(), FPS, frames).expect("fixture motion is valid")
}

/// Applies independent Gaussian rotation-vector noise of standard
/// deviation `sigma` (radians) to every joint of every frame.
pub fn perturb(m: &Motion, sigma: f64, seed: u64) -> Motion {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma must be finite and non-negative");
    let frames = m
        .frames()
        .iter()
        .map(|f| Frame {
            root_translation: f.root_translation,
            rotations: f
                .rotations
                .iter()
                .map(|q| {
                    let eps = [normal.sample(&mut rng), normal.sample(&mut rng), normal.sample(&mut rng)];
                    let r = crate::math::mat_mul(&quat_to_matrix(q), &exp_map::<f64>(eps));
                    matrix_to_quat(&r)
                })
                .collect(),
        })
        .collect();
    m.with_frames(frames).expect("perturbed rotations stay unit")
}

/// One seeded editing task: a clean dance, its script at `theta`, and a
/// noisy copy to start the optimizer from.
#[derive(Debug, Clone)]
pub struct PerturbationTask {
    pub clean: Motion,
    pub perturbed: Motion,
    pub script: SosScript,
}

pub const TASK_FRAMES: usize = 60;
pub const TASK_SIGMA: f64 = 0.2;
pub const TASK_THETA: f64 = 0.9;

pub fn perturbation_task(seed: u64) -> PerturbationTask {
    let clean = dance_motion(TASK_FRAMES, seed);
    let script = crate::pipeline::extract(&clean, crate::pipeline::Selection::Threshold(TASK_THETA), false)
        .expect("fixture extraction succeeds")
        .script;
    let perturbed = perturb(&clean, TASK_SIGMA, seed.wrapping_add(0x9e37_79b9));
    PerturbationTask { clean, perturbed, script }
}

/// Named fixture motions used across the test suites and the CLI.
pub fn fixtures() -> Vec<(&'static str, Motion)> {
    vec![
        ("static", static_motion(&rest_pose(), 40)),
        ("arm_swing", arm_swing_motion(48)),
        ("dance", dance_motion(TASK_FRAMES, 7)),
        ("perturbed_dance", perturbation_task(7).perturbed),
    ]
}
