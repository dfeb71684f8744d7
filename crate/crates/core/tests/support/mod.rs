//! Oracles and generators shared by the integration suites.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use soskit_core::features::Part;
use soskit_core::motion::{matrix_to_quat, Frame, Motion};
use soskit_core::math::exp_map;
use soskit_core::optimizer::params::{encode_direct, Encoding};
use soskit_core::optimizer::{LossWeights, SosLoss};
use soskit_core::quantizer::num_symbols;
use soskit_core::script::{Entry, SosScript};
use soskit_core::synth;

/// One merge as `(start, boundary, end, distance)`.
pub type Merge = (usize, usize, usize, f64);

fn sse(points: &[Vec<f64>]) -> f64 {
    let n = points.len() as f64;
    let dim = points[0].len();
    let mean: Vec<f64> = (0..dim).map(|d| points.iter().map(|p| p[d]).sum::<f64>() / n).collect();
    points
        .iter()
        .map(|p| p.iter().zip(&mean).map(|(a, m)| (a - m) * (a - m)).sum::<f64>())
        .sum()
}

/// Exhaustive Ward agglomeration over contiguous segments. Every step
/// recomputes the variance increase of each adjacent pair from the raw
/// points, `SSE(A u B) - SSE(A) - SSE(B)`, and merges the smallest (earliest
/// on ties).
pub fn ward_oracle(points: &[Vec<f64>]) -> Vec<Merge> {
    let mut segs: Vec<(usize, usize)> = (0..points.len()).map(|i| (i, i + 1)).collect();
    let mut merges = Vec::new();
    while segs.len() > 1 {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..segs.len() - 1 {
            let (a, b) = (segs[i], segs[i + 1]);
            let delta = sse(&points[a.0..b.1]) - sse(&points[a.0..a.1]) - sse(&points[b.0..b.1]);
            let d = (2.0 * delta.max(0.0)).sqrt();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        let (i, d) = best.unwrap();
        let (a, b) = (segs[i], segs.remove(i + 1));
        segs[i] = (a.0, b.1);
        merges.push((a.0, b.0, b.1, d));
    }
    merges
}

pub fn random_points(rng: &mut ChaCha8Rng, t: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..t).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

/// Piecewise-constant signal with level changes at `cuts`.
pub fn piecewise_constant(rng: &mut ChaCha8Rng, t: usize, dim: usize, cuts: &[usize]) -> Vec<Vec<f64>> {
    let mut levels = vec![random_level(rng, dim)];
    for _ in cuts {
        levels.push(random_level(rng, dim));
    }
    (0..t)
        .map(|i| levels[cuts.iter().filter(|&&c| i >= c).count()].clone())
        .collect()
}

fn random_level(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect()
}

pub fn random_rotvec(rng: &mut ChaCha8Rng, scale: f64) -> [f64; 3] {
    [0; 3].map(|_| rng.random_range(-scale..scale))
}

/// Humanoid clip whose joints wander smoothly around the rest pose.
pub fn random_clip(rng: &mut ChaCha8Rng, frames: usize) -> Motion {
    let base = synth::rest_pose();
    let joints = base.rotations.len();
    let start: Vec<[f64; 3]> = (0..joints).map(|_| random_rotvec(rng, 0.8)).collect();
    let vel: Vec<[f64; 3]> = (0..joints).map(|_| random_rotvec(rng, 0.15)).collect();
    let frames = (0..frames)
        .map(|t| {
            let rotations = base
                .rotations
                .iter()
                .enumerate()
                .map(|(j, q)| {
                    let v = [0, 1, 2].map(|i| start[j][i] + vel[j][i] * t as f64);
                    let r = soskit_core::math::mat_mul(&soskit_core::motion::quat_to_matrix(q), &exp_map::<f64>(v));
                    matrix_to_quat(&r)
                })
                .collect();
            Frame {
                root_translation: [rng.random_range(-0.1..0.1), 0.02 * t as f64, 0.0],
                rotations,
            }
        })
        .collect();
    Motion::new(synth::humanoid_skeleton(), synth::FPS, frames).unwrap()
}

pub fn random_script(rng: &mut ChaCha8Rng, frames: usize, entries: usize) -> SosScript {
    let mut cells = std::collections::BTreeSet::new();
    while cells.len() < entries.min(frames * 6) {
        cells.insert((rng.random_range(0..frames), rng.random_range(0..6usize)));
    }
    let entries = cells
        .into_iter()
        .map(|(frame, p)| {
            let part = Part::ALL[p];
            Entry {
                part,
                frame,
                symbol: rng.random_range(0..num_symbols(part)) as u8,
            }
        })
        .collect();
    SosScript::new(synth::FPS, frames, None, entries).unwrap()
}

/// Outcome of one finite-difference comparison.
#[derive(Debug, Clone, Copy)]
pub struct GradCheck {
    /// `|g - g_fd| / max(|g|, |g_fd|)` over the whole vector.
    pub rel: f64,
    pub dims: usize,
}

pub const FD_STEP: f64 = 1e-5;

/// Random clip, script and evaluation point; compares the tape gradient
/// with central differences over every coordinate.
pub fn gradient_check(seed: u64, periodic: bool) -> GradCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frames = rng.random_range(4..=8);
    let clip = random_clip(&mut rng, frames);
    let n_entries = rng.random_range(1..=6);
    let script = random_script(&mut rng, frames, n_entries);
    let table = encode_direct(&clip);
    let (enc, theta0) = if periodic {
        Encoding::periodic(&table, rng.random_range(1..=2)).unwrap()
    } else {
        Encoding::direct(&table)
    };
    let beta = rng.random_range(2.0..20.0);
    let weights = LossWeights {
        smooth: rng.random_range(0.0..0.05),
        init: rng.random_range(0.0..0.01),
    };
    let loss = SosLoss::new(clip.skeleton(), &enc, &script, &theta0, beta, weights).unwrap();
    // Evaluate away from theta0 so the anchor term has a gradient too.
    let theta: Vec<f64> = theta0.iter().map(|v| v + rng.random_range(-0.05..0.05)).collect();
    let (_, g) = loss.value_and_gradient(&theta).unwrap();
    let mut diff2 = 0.0;
    let mut g2 = 0.0;
    let mut fd2 = 0.0;
    let mut probe = theta.clone();
    for i in 0..theta.len() {
        probe[i] = theta[i] + FD_STEP;
        let up = loss.value(&probe).unwrap();
        probe[i] = theta[i] - FD_STEP;
        let down = loss.value(&probe).unwrap();
        probe[i] = theta[i];
        let fd = (up - down) / (2.0 * FD_STEP);
        diff2 += (g[i] - fd).powi(2);
        g2 += g[i] * g[i];
        fd2 += fd * fd;
    }
    let denom = g2.sqrt().max(fd2.sqrt());
    GradCheck {
        rel: if denom == 0.0 { 0.0 } else { diff2.sqrt() / denom },
        dims: theta.len(),
    }
}
