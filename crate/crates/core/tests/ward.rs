mod support;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use soskit_core::saliency::{build_segment_tree, saliency_track};
use support::{piecewise_constant, random_points, ward_oracle};

fn argmax(s: &[f64]) -> usize {
    (0..s.len()).fold(0, |b, i| if s[i] > s[b] { i } else { b })
}

#[test]
fn matches_brute_force_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..200 {
        let t = rng.random_range(2..=12);
        let dim = rng.random_range(1..=8);
        let pts = random_points(&mut rng, t, dim);
        let tree = build_segment_tree(&pts);
        let oracle = ward_oracle(&pts);
        assert_eq!(tree.nodes.len(), oracle.len());
        for (n, &(start, boundary, end, d)) in tree.nodes.iter().zip(&oracle) {
            assert_eq!((n.start, n.boundary_frame, n.end), (start, boundary, end), "case {case}");
            assert!((n.distance - d).abs() <= 1e-9, "case {case}: {} vs {d}", n.distance);
        }
    }
}

#[test]
fn oracle_agrees_on_documented_example() {
    let pts: Vec<Vec<f64>> = [0.0, 0.0, 10.0, 10.0].iter().map(|v| vec![*v]).collect();
    let merges = ward_oracle(&pts);
    assert_eq!(merges[0], (0, 1, 2, 0.0));
    assert_eq!(merges[1], (2, 3, 4, 0.0));
    assert!((merges[2].3 - 200f64.sqrt()).abs() < 1e-12);
}

#[test]
fn single_transition_is_the_argmax() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let k = rng.random_range(1..20);
        let dim = rng.random_range(1..=8);
        let sig = piecewise_constant(&mut rng, 20, dim, &[k]);
        assert_eq!(argmax(&saliency_track(&build_segment_tree(&sig))), k);
    }
}

#[test]
fn two_transitions_are_the_top_two() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..50 {
        let k1 = rng.random_range(1..18);
        let k2 = rng.random_range(k1 + 1..20);
        let sig = piecewise_constant(&mut rng, 20, 3, &[k1, k2]);
        let s = saliency_track(&build_segment_tree(&sig));
        let mut idx: Vec<usize> = (0..20).collect();
        idx.sort_by(|a, b| s[*b].total_cmp(&s[*a]));
        let mut top = [idx[0], idx[1]];
        top.sort();
        assert_eq!(top, [k1, k2]);
    }
}

fn features() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..24, 1usize..6).prop_flat_map(|(t, d)| prop::collection::vec(prop::collection::vec(-5.0..5.0f64, d), t))
}

proptest! {
    #[test]
    fn boundaries_cover_every_frame_once(pts in features()) {
        let tree = build_segment_tree(&pts);
        let mut b: Vec<usize> = tree.nodes.iter().map(|n| n.boundary_frame).collect();
        b.sort();
        prop_assert_eq!(b, (1..pts.len()).collect::<Vec<_>>());
        let s = saliency_track(&tree);
        prop_assert_eq!(s[0], 0.0);
        prop_assert!(s.iter().all(|v| v.is_finite() && *v >= 0.0));
    }

    #[test]
    fn constant_shift_leaves_tree_unchanged(pts in features(), shift in -3.0..3.0f64) {
        let a = build_segment_tree(&pts);
        let moved: Vec<Vec<f64>> = pts.iter().map(|r| r.iter().map(|v| v + shift).collect()).collect();
        let b = build_segment_tree(&moved);
        for (x, y) in a.nodes.iter().zip(&b.nodes) {
            prop_assert_eq!((x.start, x.boundary_frame, x.end), (y.start, y.boundary_frame, y.end));
            prop_assert!((x.distance - y.distance).abs() <= 1e-9);
        }
    }

    #[test]
    fn reversal_mirrors_saliency(pts in features()) {
        let t = pts.len();
        let s = saliency_track(&build_segment_tree(&pts));
        let rev: Vec<Vec<f64>> = pts.iter().rev().cloned().collect();
        let r = saliency_track(&build_segment_tree(&rev));
        for f in 1..t {
            prop_assert!((r[t - f] - s[f]).abs() <= 1e-9, "frame {}: {} vs {}", f, r[t - f], s[f]);
        }
    }
}
