//! Saliency-based masking and SOS synthesis.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::{OrientationFeatures, Part};
use crate::quantizer::hard_symbols;
use crate::saliency::Saliency;
use crate::script::{Entry, SosScript};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MaskRule {
    Relative { theta: f64, global_max: f64 },
    Percentile { percentiles: [f64; 6] },
}

/// Kept frames per part, in [`Part::ALL`] order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmsMask {
    pub kept: Vec<BTreeSet<usize>>,
    pub rule: MaskRule,
}

impl SmsMask {
    pub fn kept(&self, part: Part) -> &BTreeSet<usize> {
        &self.kept[part.index()]
    }

    pub fn len(&self) -> usize {
        self.kept.iter().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Whether every kept cell of `self` is also kept by `other`.
    pub fn is_subset(&self, other: &SmsMask) -> bool {
        self.kept.iter().zip(&other.kept).all(|(a, b)| a.is_subset(b))
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must lie in [0, 1], got {v}")))
    }
}

/// Keeps `(part, frame)` when its saliency is positive and at least
/// `theta` times the global maximum.
pub fn sms_mask(saliency: &Saliency, theta: f64) -> Result<SmsMask> {
    check_unit("threshold", theta)?;
    let cut = theta * saliency.global_max;
    let kept = saliency
        .tracks
        .iter()
        .map(|s| {
            s.iter()
                .enumerate()
                .filter(|(_, &v)| v > 0.0 && v >= cut)
                .map(|(f, _)| f)
                .collect()
        })
        .collect();
    Ok(SmsMask {
        kept,
        rule: MaskRule::Relative {
            theta,
            global_max: saliency.global_max,
        },
    })
}

/// Linear-interpolated quantile of sorted values.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Keeps, per part, frames whose saliency reaches that part's
/// `percentiles[part]` quantile of its positive saliency values.
pub fn sms_mask_percentile(saliency: &Saliency, percentiles: [f64; 6]) -> Result<SmsMask> {
    for (p, m) in Part::ALL.iter().zip(percentiles) {
        check_unit(&format!("percentile for {p}"), m)?;
    }
    let kept = saliency
        .tracks
        .iter()
        .zip(percentiles)
        .map(|(s, m)| {
            let mut positive: Vec<f64> = s.iter().copied().filter(|v| *v > 0.0).collect();
            if positive.is_empty() {
                return BTreeSet::new();
            }
            positive.sort_by(f64::total_cmp);
            let cut = quantile(&positive, m);
            s.iter()
                .enumerate()
                .filter(|(_, &v)| v > 0.0 && v >= cut)
                .map(|(f, _)| f)
                .collect()
        })
        .collect();
    Ok(SmsMask {
        kept,
        rule: MaskRule::Percentile { percentiles },
    })
}

/// Seeded source of per-part percentiles drawn from U(0, 1).
pub struct PercentileSampler {
    rng: ChaCha8Rng,
}

impl PercentileSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn sample(&mut self) -> [f64; 6] {
        std::array::from_fn(|_| self.rng.random::<f64>())
    }
}

#[derive(Debug, Clone, Default)]
pub struct SynthesisOptions {
    pub fps: f64,
    pub text: Option<String>,
    /// Also emit every part's symbol at frame 0.
    pub include_first_frame: bool,
}

/// One entry per kept cell, carrying the hard-quantized symbol there.
pub fn synthesize_sos(o: &OrientationFeatures, mask: &SmsMask, opts: &SynthesisOptions) -> Result<SosScript> {
    let symbols = hard_symbols(o);
    let t = o.num_frames();
    let mut entries = Vec::with_capacity(mask.len());
    for part in Part::ALL {
        let mut frames = mask.kept(part).clone();
        if opts.include_first_frame {
            frames.insert(0);
        }
        for f in frames {
            if f >= t {
                return Err(Error::Shape(format!("mask frame {f} outside {t} feature frames")));
            }
            entries.push(Entry {
                part,
                frame: f,
                symbol: symbols[f][part.index()],
            });
        }
    }
    SosScript::new(opts.fps, t, opts.text.clone(), entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sal(tracks: Vec<Vec<f64>>) -> Saliency {
        let global_max = tracks.iter().flatten().copied().fold(0.0, f64::max);
        Saliency { tracks, global_max }
    }

    fn la_only(track: Vec<f64>) -> Saliency {
        let n = track.len();
        let mut tracks = vec![vec![0.0; n]; 6];
        tracks[Part::LeftArm.index()] = track;
        sal(tracks)
    }

    #[test]
    fn relative_threshold_examples() {
        let s = la_only(vec![0.0, 0.0, 14.1421, 0.0]);
        let m = sms_mask(&s, 0.5).unwrap();
        assert_eq!(m.kept(Part::LeftArm), &BTreeSet::from([2]));
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn threshold_bounds() {
        let s = la_only(vec![0.0, 1.0, 3.0, 0.5, 3.0]);
        assert_eq!(sms_mask(&s, 0.0).unwrap().kept(Part::LeftArm), &BTreeSet::from([1, 2, 3, 4]));
        assert_eq!(sms_mask(&s, 1.0).unwrap().kept(Part::LeftArm), &BTreeSet::from([2, 4]));
        assert!(sms_mask(&s, 1.5).is_err());
        assert!(sms_mask(&s, -0.1).is_err());
    }

    #[test]
    fn zero_saliency_gives_empty_mask() {
        let s = sal(vec![vec![0.0; 5]; 6]);
        assert!(sms_mask(&s, 0.0).unwrap().is_empty());
        assert!(sms_mask_percentile(&s, [0.0; 6]).unwrap().is_empty());
    }

    #[test]
    fn percentile_extremes() {
        let mut tracks = vec![vec![0.0, 2.0, 5.0, 1.0, 5.0, 0.0]; 6];
        tracks[3] = vec![0.0; 6];
        let s = sal(tracks);
        let low = sms_mask_percentile(&s, [0.0; 6]).unwrap();
        assert_eq!(low.kept, sms_mask(&s, 0.0).unwrap().kept);
        let high = sms_mask_percentile(&s, [1.0; 6]).unwrap();
        assert_eq!(high.kept(Part::Root), &BTreeSet::from([2, 4]));
        assert!(high.kept(Part::RightLeg).is_empty());
        let mid = sms_mask_percentile(&s, [0.5; 6]).unwrap();
        // positive values [1, 2, 5, 5]: median 3.5
        assert_eq!(mid.kept(Part::Spine), &BTreeSet::from([2, 4]));
    }

    #[test]
    fn sampler_is_seeded() {
        let a: Vec<_> = {
            let mut s = PercentileSampler::new(42);
            (0..4).map(|_| s.sample()).collect()
        };
        let mut s = PercentileSampler::new(42);
        let b: Vec<_> = (0..4).map(|_| s.sample()).collect();
        assert_eq!(a, b);
        assert!(a.iter().flatten().all(|v| (0.0..1.0).contains(v)));
        assert_ne!(PercentileSampler::new(43).sample(), a[0]);
    }

    #[test]
    fn empty_mask_gives_empty_script() {
        let o = OrientationFeatures {
            o: vec![[[0.0, 1.0, 0.0]; 6]; 4],
            degenerate: vec![[false; 6]; 4],
        };
        let mask = sms_mask(&sal(vec![vec![0.0; 4]; 6]), 0.5).unwrap();
        let s = synthesize_sos(&o, &mask, &SynthesisOptions { fps: 30.0, ..Default::default() }).unwrap();
        assert!(s.is_empty());
        let first = synthesize_sos(
            &o,
            &mask,
            &SynthesisOptions {
                fps: 30.0,
                include_first_frame: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(first.len(), 6);
        assert!(first.entries().iter().all(|e| e.frame == 0));
    }
}
