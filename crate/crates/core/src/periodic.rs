//! Periodic parameterization `p = b + sum_h a_h sin(f_h (N - s_h))` with
//! `N` the frame offset from the sequence centre, and its Fourier-based fit.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::autodiff::Scalar;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    /// Radians per frame.
    pub frequency: f64,
    pub amplitude: f64,
    /// Phase shift in frames.
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub offset: f64,
    pub harmonics: Vec<Harmonic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicParams {
    pub channels: Vec<ChannelParams>,
}

impl PeriodicParams {
    pub fn num_harmonics(&self) -> usize {
        self.channels.first().map_or(0, |c| c.harmonics.len())
    }
}

/// Frame offsets from the centre of a `t`-frame sequence.
pub fn centred_time(t: usize) -> Vec<f64> {
    let c = (t as f64 - 1.0) / 2.0;
    (0..t).map(|i| i as f64 - c).collect()
}

/// One channel; `harmonics` holds `(frequency, amplitude, shift)` triples.
pub fn reconstruct_channel<S: Scalar>(offset: S, harmonics: &[[S; 3]], time: &[f64]) -> Vec<S> {
    time.iter()
        .map(|&n| {
            harmonics
                .iter()
                .fold(offset, |acc, [f, a, s]| acc + *a * (*f * (S::constant(n) - *s)).sin())
        })
        .collect()
}

/// `T x P` reconstruction.
pub fn reconstruct_periodic(p: &PeriodicParams, t: usize) -> Vec<Vec<f64>> {
    let time = centred_time(t);
    let cols: Vec<Vec<f64>> = p
        .channels
        .iter()
        .map(|c| {
            let h: Vec<[f64; 3]> = c.harmonics.iter().map(|h| [h.frequency, h.amplitude, h.shift]).collect();
            reconstruct_channel(c.offset, &h, &time)
        })
        .collect();
    (0..t).map(|i| cols.iter().map(|c| c[i]).collect()).collect()
}

/// Least-squares coefficients `[A_1, B_1, ..., A_H, B_H, b]` of
/// `sum A_h sin(f_h N) + B_h cos(f_h N) + b`, and the residual sum of squares.
fn solve_ls(x: &[f64], time: &[f64], freqs: &[f64]) -> (Vec<f64>, f64) {
    let cols = 2 * freqs.len() + 1;
    let design = DMatrix::from_fn(x.len(), cols, |i, j| {
        if j == cols - 1 {
            1.0
        } else {
            let arg = freqs[j / 2] * time[i];
            if j % 2 == 0 {
                arg.sin()
            } else {
                arg.cos()
            }
        }
    });
    let rhs = DVector::from_column_slice(x);
    let coef = design
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .unwrap_or_else(|_| DVector::zeros(cols));
    let resid = &rhs - &design * &coef;
    (coef.iter().copied().collect(), resid.norm_squared())
}

fn golden_min(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        if (b - a).abs() < 1e-13 {
            break;
        }
    }
    if fc <= fd {
        c
    } else {
        d
    }
}

fn peak_bin(x: &[f64], planner: &mut FftPlanner<f64>) -> (usize, f64) {
    let t = x.len();
    let mut buf: Vec<Complex<f64>> = x.iter().map(|v| Complex::new(*v, 0.0)).collect();
    planner.plan_fft_forward(t).process(&mut buf);
    (1..=t / 2)
        .map(|k| (k, buf[k].norm()))
        .fold((1, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best })
}

fn fit_channel(x: &[f64], time: &[f64], harmonics: usize, planner: &mut FftPlanner<f64>) -> ChannelParams {
    let t = x.len();
    let bin = TAU / t as f64;
    let mean = x.iter().sum::<f64>() / t as f64;
    let scale = x.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    // A frequency within half a bin of zero or Nyquist, or two harmonics less
    // than a bin apart, can only be told apart by huge cancelling amplitudes.
    let min_freq = bin / 2.0;
    let max_freq = PI - bin / 2.0;
    let gap = bin;
    let mut freqs: Vec<f64> = Vec::new();
    if scale > 1e-12 {
        let mut resid: Vec<f64> = x.iter().map(|v| v - mean).collect();
        for _ in 0..harmonics {
            let (k, mag) = peak_bin(&resid, planner);
            if mag <= 1e-9 * scale * t as f64 {
                break;
            }
            let centre = k as f64 * bin;
            let lo = (centre - bin).max(min_freq);
            let hi = (centre + bin).min(max_freq);
            let f = golden_min(lo, hi, |f| {
                if !separated(f, &freqs, gap) {
                    return f64::INFINITY;
                }
                let mut trial = freqs.clone();
                trial.push(f);
                solve_ls(x, time, &trial).1
            });
            if !separated(f, &freqs, gap) {
                break;
            }
            freqs.push(f);
            let (coef, _) = solve_ls(x, time, &freqs);
            resid = fitted_residual(x, time, &freqs, &coef);
        }
        // Joint refinement: frequencies found greedily see leakage from the
        // components found after them.
        let mut width = bin / 2.0;
        for _ in 0..4 {
            for h in 0..freqs.len() {
                let lo = (freqs[h] - width).max(min_freq);
                let hi = (freqs[h] + width).min(max_freq);
                let others: Vec<f64> = freqs.iter().enumerate().filter(|(i, _)| *i != h).map(|(_, f)| *f).collect();
                let best = golden_min(lo, hi, |f| {
                    if !separated(f, &others, gap) {
                        return f64::INFINITY;
                    }
                    let mut trial = freqs.clone();
                    trial[h] = f;
                    solve_ls(x, time, &trial).1
                });
                let mut trial = freqs.clone();
                trial[h] = best;
                if separated(best, &others, gap) && solve_ls(x, time, &trial).1 <= solve_ls(x, time, &freqs).1 {
                    freqs = trial;
                }
            }
            width /= 4.0;
        }
    }
    let (coef, _) = solve_ls(x, time, &freqs);
    let mut out: Vec<Harmonic> = freqs
        .iter()
        .enumerate()
        .map(|(h, &f)| {
            let (a_sin, b_cos) = (coef[2 * h], coef[2 * h + 1]);
            let amplitude = a_sin.hypot(b_cos);
            // A sin(fN) + B cos(fN) = a sin(f (N - s)) with A = a cos(fs), B = -a sin(fs).
            let phase = (-b_cos).atan2(a_sin);
            let period = TAU / f;
            let mut shift = phase / f;
            shift -= period * (shift / period).round();
            Harmonic {
                frequency: f,
                amplitude,
                shift,
            }
        })
        .collect();
    // Unused harmonics sit at silent grid frequencies so an optimizer can
    // still grow them.
    let mut k = 1;
    while out.len() < harmonics {
        while !separated(k as f64 * bin, &freqs, gap * 0.999) {
            k += 1;
        }
        freqs.push(k as f64 * bin);
        out.push(Harmonic {
            frequency: k as f64 * bin,
            amplitude: 0.0,
            shift: 0.0,
        });
    }
    ChannelParams {
        offset: *coef.last().expect("offset column"),
        harmonics: out,
    }
}

fn separated(f: f64, others: &[f64], gap: f64) -> bool {
    others.iter().all(|o| (f - o).abs() >= gap)
}

fn fitted_residual(x: &[f64], time: &[f64], freqs: &[f64], coef: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(time)
        .map(|(v, &n)| {
            let fit: f64 = freqs
                .iter()
                .enumerate()
                .map(|(h, f)| coef[2 * h] * (f * n).sin() + coef[2 * h + 1] * (f * n).cos())
                .sum::<f64>()
                + coef[coef.len() - 1];
            v - fit
        })
        .collect()
}

/// Fits `harmonics` sinusoids per channel of a `T x P` signal.
///
/// Each harmonic starts at the strongest remaining Fourier bin and its
/// frequency is refined by least squares, so off-grid frequencies are
/// recovered too.
pub fn fit_periodic(signal: &[Vec<f64>], harmonics: usize) -> Result<PeriodicParams> {
    let t = signal.len();
    if t < 4 {
        return Err(Error::Parameter(format!("periodic fit needs at least 4 frames, got {t}")));
    }
    if harmonics == 0 {
        return Err(Error::Parameter("harmonic count must be at least 1".into()));
    }
    let p = signal[0].len();
    if signal.iter().any(|row| row.len() != p) {
        return Err(Error::Shape("ragged periodic signal".into()));
    }
    let time = centred_time(t);
    let mut planner = FftPlanner::new();
    let channels = (0..p)
        .map(|c| {
            let col: Vec<f64> = signal.iter().map(|row| row[c]).collect();
            fit_channel(&col, &time, harmonics, &mut planner)
        })
        .collect();
    Ok(PeriodicParams { channels })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mse(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
        let n = (a.len() * a[0].len()) as f64;
        a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n
    }

    #[test]
    fn recovers_off_grid_sinusoid() {
        let t = 64;
        let sig: Vec<Vec<f64>> = centred_time(t).iter().map(|n| vec![2.0 * (0.5 * (n - 1.0)).sin() + 3.0]).collect();
        let p = fit_periodic(&sig, 1).unwrap();
        let c = &p.channels[0];
        let h = c.harmonics[0];
        assert!((h.amplitude - 2.0).abs() < 1e-4, "{h:?}");
        assert!((h.frequency - 0.5).abs() < 1e-6, "{h:?}");
        assert!((c.offset - 3.0).abs() < 1e-4);
        let period = TAU / h.frequency;
        let ds = (h.shift - 1.0) - period * ((h.shift - 1.0) / period).round();
        assert!(ds.abs() < 1e-4, "{h:?}");
        assert!(mse(&reconstruct_periodic(&p, t), &sig) <= 1e-6);
    }

    #[test]
    fn constant_channel() {
        let sig = vec![vec![7.0]; 10];
        let p = fit_periodic(&sig, 2).unwrap();
        assert!((p.channels[0].offset - 7.0).abs() < 1e-12);
        assert!(p.channels[0].harmonics.iter().all(|h| h.amplitude == 0.0));
        assert_eq!(p.num_harmonics(), 2);
    }

    #[test]
    fn in_grid_mixture_is_exact() {
        let t = 48;
        let bin = TAU / t as f64;
        let sig: Vec<Vec<f64>> = centred_time(t)
            .iter()
            .map(|n| {
                vec![
                    1.5 * (3.0 * bin * (n - 0.7)).sin() + 0.4 * (7.0 * bin * (n + 2.0)).sin() - 1.0,
                    0.2 * (bin * n).sin(),
                ]
            })
            .collect();
        let p = fit_periodic(&sig, 2).unwrap();
        assert!(mse(&reconstruct_periodic(&p, t), &sig) <= 1e-9);
    }

    #[test]
    fn reconstruction_properties() {
        let base = PeriodicParams {
            channels: vec![ChannelParams {
                offset: 0.5,
                harmonics: vec![Harmonic { frequency: 0.3, amplitude: 1.2, shift: 0.4 }],
            }],
        };
        let t = 30;
        let r = reconstruct_periodic(&base, t);
        let mut doubled = base.clone();
        doubled.channels[0].harmonics[0].amplitude *= 2.0;
        let r2 = reconstruct_periodic(&doubled, t);
        for (a, b) in r.iter().zip(&r2) {
            assert!(((b[0] - 0.5) - 2.0 * (a[0] - 0.5)).abs() < 1e-12);
        }
        let mut shifted = base.clone();
        shifted.channels[0].harmonics[0].shift += TAU / 0.3;
        assert!(mse(&reconstruct_periodic(&shifted, t), &r) < 1e-18);
        let mut silent = base.clone();
        silent.channels[0].harmonics[0].amplitude = 0.0;
        assert!(reconstruct_periodic(&silent, t).iter().all(|row| row[0] == 0.5));
    }

    #[test]
    fn rejects_short_signal() {
        assert!(fit_periodic(&vec![vec![1.0]; 3], 1).is_err());
    }
}
