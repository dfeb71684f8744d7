//! Motion parameter encodings.
//!
//! The direct encoding is a `T x C` table with `C = 1 + 3J`: per frame the
//! root yaw followed by one rotation vector per joint. The root rotation is
//! `Rz(yaw) * exp(v_root)`; every other joint is `exp(v_j)`.

use crate::autodiff::Scalar;
use crate::math::{self, exp_map, log_map, Mat3};
use crate::motion::{matrix_to_quat, quat_to_matrix, Frame, Motion};
use crate::periodic::{fit_periodic, reconstruct_channel, centred_time, PeriodicParams};
use crate::error::Result;

pub fn channels_per_frame(joints: usize) -> usize {
    1 + 3 * joints
}

/// Yaw about world up of a quaternion's twist component.
fn twist_yaw(q: &[f64; 4]) -> f64 {
    2.0 * q[3].atan2(q[0])
}

fn wrap_near(angle: f64, reference: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    angle - tau * ((angle - reference) / tau).round()
}

pub fn encode_direct(m: &Motion) -> Vec<Vec<f64>> {
    let mut prev_yaw = 0.0;
    m.frames()
        .iter()
        .enumerate()
        .map(|(t, f)| {
            let root = &f.rotations[0];
            let mut yaw = twist_yaw(root);
            if t > 0 {
                yaw = wrap_near(yaw, prev_yaw);
            }
            prev_yaw = yaw;
            let swing = math::mat_mul(&math::rot_z::<f64>(-yaw), &quat_to_matrix(root));
            let mut row = Vec::with_capacity(channels_per_frame(f.rotations.len()));
            row.push(yaw);
            row.extend(log_map(&swing));
            for q in &f.rotations[1..] {
                row.extend(log_map(&quat_to_matrix(q)));
            }
            row
        })
        .collect()
}

/// Local rotation matrices of one frame's direct row.
pub fn frame_rotations<S: Scalar>(row: &[S]) -> Vec<Mat3<S>> {
    let joints = (row.len() - 1) / 3;
    (0..joints)
        .map(|j| {
            let v = [row[1 + 3 * j], row[2 + 3 * j], row[3 + 3 * j]];
            let r = exp_map(v);
            if j == 0 {
                math::mat_mul(&math::rot_z(row[0]), &r)
            } else {
                r
            }
        })
        .collect()
}

/// Motion from a direct table, keeping the template motion's skeleton,
/// timing and root translation.
pub fn decode_direct(template: &Motion, table: &[Vec<f64>]) -> Result<Motion> {
    let frames = template
        .frames()
        .iter()
        .zip(table)
        .map(|(f, row)| Frame {
            root_translation: f.root_translation,
            rotations: frame_rotations::<f64>(row).iter().map(matrix_to_quat).collect(),
        })
        .collect();
    template.with_frames(frames)
}

/// Optimization variables and how they map onto a direct table.
#[derive(Debug, Clone)]
pub enum Encoding {
    Direct {
        frames: usize,
        channels: usize,
    },
    /// Band-limited offset: the table is `base + recon(theta) - recon(theta0)`,
    /// so `theta0` reproduces the initial motion exactly. Frequencies are
    /// stored divided by `freq_scale`, i.e. as phase swing over half the clip,
    /// which keeps their gradients on the same footing as the amplitudes.
    Periodic {
        freq_scale: f64,
        base: Vec<Vec<f64>>,
        base_fit: Vec<Vec<f64>>,
        harmonics: usize,
    },
}

impl Encoding {
    pub fn direct(initial: &[Vec<f64>]) -> (Self, Vec<f64>) {
        let enc = Encoding::Direct {
            frames: initial.len(),
            channels: initial[0].len(),
        };
        (enc, initial.iter().flatten().copied().collect())
    }

    pub fn periodic(initial: &[Vec<f64>], harmonics: usize) -> Result<(Self, Vec<f64>)> {
        let fit = fit_periodic(initial, harmonics)?;
        let freq_scale = frequency_scale(initial.len());
        let per = 1 + 3 * harmonics;
        let mut theta = flatten_periodic(&fit);
        for (i, v) in theta.iter_mut().enumerate() {
            if i % per != 0 && (i % per - 1) % 3 == 0 {
                *v /= freq_scale;
            }
        }
        let base_fit = crate::periodic::reconstruct_periodic(&fit, initial.len());
        Ok((
            Encoding::Periodic {
                freq_scale,
                base: initial.to_vec(),
                base_fit,
                harmonics,
            },
            theta,
        ))
    }

    pub fn frames(&self) -> usize {
        match self {
            Encoding::Direct { frames, .. } => *frames,
            Encoding::Periodic { base, .. } => base.len(),
        }
    }

    pub fn channels(&self) -> usize {
        match self {
            Encoding::Direct { channels, .. } => *channels,
            Encoding::Periodic { base, .. } => base[0].len(),
        }
    }

    /// Decodes a single frame's row.
    pub fn row<S: Scalar>(&self, theta: &[S], t: usize) -> Vec<S> {
        match self {
            Encoding::Direct { channels, .. } => theta[t * channels..(t + 1) * channels].to_vec(),
            Encoding::Periodic { .. } => self.table(theta).swap_remove(t),
        }
    }

    /// Decodes the full `T x C` table.
    pub fn table<S: Scalar>(&self, theta: &[S]) -> Vec<Vec<S>> {
        match self {
            Encoding::Direct { channels, .. } => theta.chunks(*channels).map(<[S]>::to_vec).collect(),
            Encoding::Periodic {
                freq_scale,
                base,
                base_fit,
                harmonics,
            } => {
                let t = base.len();
                let time = centred_time(t);
                let per = 1 + 3 * harmonics;
                let cols: Vec<Vec<S>> = theta
                    .chunks(per)
                    .map(|c| {
                        let h: Vec<[S; 3]> = c[1..].chunks(3).map(|h| [h[0] * *freq_scale, h[1], h[2]]).collect();
                        reconstruct_channel(c[0], &h, &time)
                    })
                    .collect();
                (0..t)
                    .map(|i| {
                        cols.iter()
                            .enumerate()
                            .map(|(c, col)| col[i] + (base[i][c] - base_fit[i][c]))
                            .collect()
                    })
                    .collect()
            }
        }
    }
}

fn frequency_scale(frames: usize) -> f64 {
    2.0 / (frames.max(2) - 1) as f64
}

/// `[offset, f_1, a_1, s_1, ..., f_H, a_H, s_H]` per channel.
pub fn flatten_periodic(p: &PeriodicParams) -> Vec<f64> {
    p.channels
        .iter()
        .flat_map(|c| {
            std::iter::once(c.offset).chain(c.harmonics.iter().flat_map(|h| [h.frequency, h.amplitude, h.shift]))
        })
        .collect()
}
