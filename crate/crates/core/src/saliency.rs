//! Temporal saliency: Ward agglomerative clustering restricted to
//! temporally adjacent segments, and the per-frame saliency signal read
//! off the resulting dendrogram.

use serde::Serialize;

use crate::features::{OrientationFeatures, Part};
use crate::math;
use crate::quantizer::{templates, TemplateSet};

/// Per-part `T x C` central-difference features of the template
/// similarities (`C = 26` for limbs, `8` for the root).
#[derive(Debug, Clone, PartialEq)]
pub struct DiffFeatures {
    pub parts: Vec<Vec<Vec<f64>>>,
}

/// Template similarities of the normalized features, one row per frame.
fn similarities(o: &OrientationFeatures, part: Part, set: &TemplateSet) -> Vec<Vec<f64>> {
    let tpl = set.for_part(part);
    o.unit_directions()
        .iter()
        .map(|row| tpl.iter().map(|u| math::dot(row[part.index()], *u)).collect())
        .collect()
}

/// Central differences with one-sided endpoints.
pub fn central_difference(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let t = rows.len();
    let diff = |a: &[f64], b: &[f64], s: f64| a.iter().zip(b).map(|(x, y)| (x - y) * s).collect::<Vec<_>>();
    (0..t)
        .map(|i| {
            if t < 2 {
                vec![0.0; rows[i].len()]
            } else if i == 0 {
                diff(&rows[1], &rows[0], 1.0)
            } else if i == t - 1 {
                diff(&rows[t - 1], &rows[t - 2], 1.0)
            } else {
                diff(&rows[i + 1], &rows[i - 1], 0.5)
            }
        })
        .collect()
}

pub fn diff_features(o: &OrientationFeatures, set: &TemplateSet) -> DiffFeatures {
    DiffFeatures {
        parts: Part::ALL
            .iter()
            .map(|&p| central_difference(&similarities(o, p, set)))
            .collect(),
    }
}

/// Ward linkage distance between two clusters, `sqrt(2 * delta)` where
/// `delta = n_a n_b / (n_a + n_b) * |mu_a - mu_b|^2`.
pub fn ward_merge_cost(n_a: usize, mean_a: &[f64], n_b: usize, mean_b: &[f64]) -> f64 {
    let (na, nb) = (n_a as f64, n_b as f64);
    let sq: f64 = mean_a.iter().zip(mean_b).map(|(a, b)| (a - b) * (a - b)).sum();
    (2.0 * na * nb / (na + nb) * sq).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentNode {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    /// First frame of the right (later) child.
    pub boundary_frame: usize,
    /// Half-open frame interval covered by the node.
    pub start: usize,
    pub end: usize,
}

/// Dendrogram of contiguous segments. Node ids `0..T` are the frames;
/// internal node `T + k` is the `k`-th merge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentTree {
    pub num_frames: usize,
    pub nodes: Vec<SegmentNode>,
}

impl SegmentTree {
    /// Frame interval covered by any node id.
    pub fn interval(&self, id: usize) -> (usize, usize) {
        if id < self.num_frames {
            (id, id + 1)
        } else {
            let n = &self.nodes[id - self.num_frames];
            (n.start, n.end)
        }
    }
}

struct Cluster {
    start: usize,
    end: usize,
    id: usize,
    mean: Vec<f64>,
}

impl Cluster {
    fn size(&self) -> usize {
        self.end - self.start
    }
}

/// Greedy agglomeration of adjacent clusters by minimum Ward cost. Ties go
/// to the earliest boundary.
pub fn build_segment_tree(features: &[Vec<f64>]) -> SegmentTree {
    let t = features.len();
    let mut clusters: Vec<Cluster> = features
        .iter()
        .enumerate()
        .map(|(i, f)| Cluster {
            start: i,
            end: i + 1,
            id: i,
            mean: f.clone(),
        })
        .collect();
    let cost = |a: &Cluster, b: &Cluster| ward_merge_cost(a.size(), &a.mean, b.size(), &b.mean);
    // costs[i] is the cost of merging clusters[i] with clusters[i + 1].
    let mut costs: Vec<f64> = clusters.windows(2).map(|w| cost(&w[0], &w[1])).collect();
    let mut nodes = Vec::with_capacity(t.saturating_sub(1));
    while clusters.len() > 1 {
        let mut best = 0;
        for (i, &c) in costs.iter().enumerate() {
            if c < costs[best] {
                best = i;
            }
        }
        let right = clusters.remove(best + 1);
        let left = &mut clusters[best];
        let (na, nb) = (left.size() as f64, right.size() as f64);
        for (m, r) in left.mean.iter_mut().zip(&right.mean) {
            *m = (na * *m + nb * r) / (na + nb);
        }
        nodes.push(SegmentNode {
            left: left.id,
            right: right.id,
            distance: costs[best],
            boundary_frame: right.start,
            start: left.start,
            end: right.end,
        });
        left.end = right.end;
        left.id = t + nodes.len() - 1;
        costs.remove(best);
        if best > 0 {
            costs[best - 1] = cost(&clusters[best - 1], &clusters[best]);
        }
        if best < costs.len() {
            costs[best] = cost(&clusters[best], &clusters[best + 1]);
        }
    }
    SegmentTree { num_frames: t, nodes }
}

/// Per-frame saliency: each merge distance lands on the first frame of the
/// later child; frame 0 stays zero.
pub fn saliency_track(tree: &SegmentTree) -> Vec<f64> {
    let mut s = vec![0.0; tree.num_frames];
    for n in &tree.nodes {
        s[n.boundary_frame] = n.distance;
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Saliency {
    /// One track per part in [`Part::ALL`] order.
    pub tracks: Vec<Vec<f64>>,
    pub global_max: f64,
}

impl Saliency {
    pub fn track(&self, part: Part) -> &[f64] {
        &self.tracks[part.index()]
    }

    pub fn num_frames(&self) -> usize {
        self.tracks.first().map_or(0, Vec::len)
    }
}

/// Runs the per-part pipeline, evaluating the six parts in parallel.
pub fn saliency_all_parts(o: &OrientationFeatures) -> Saliency {
    let diff = diff_features(o, templates());
    let tracks: Vec<Vec<f64>> = std::thread::scope(|scope| {
        let handles: Vec<_> = diff
            .parts
            .iter()
            .map(|f| scope.spawn(move || saliency_track(&build_segment_tree(f))))
            .collect();
        handles.into_iter().map(|h| h.join().expect("saliency worker panicked")).collect()
    });
    let global_max = tracks.iter().flatten().copied().fold(0.0, f64::max);
    Saliency { tracks, global_max }
}
