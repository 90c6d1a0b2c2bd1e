//! Small-cluster refinement.
//!
//! Clusters with fewer than `min_cluster_size` members are dismantled in a
//! single pass. Under [`SmallClusterPolicy::Noise`] their points become
//! [`NOISE`]. Under [`SmallClusterPolicy::Reassign`] each point looks at its
//! `k` nearest neighbors that belong to a large cluster and lie within the
//! reach cap, and joins the cluster with the highest score
//!
//! ```text
//! S_c = (|N_c| - |sum of unit vectors toward N_c|) / min distance to N_c
//! ```
//!
//! A cluster whose neighbors surround the point scores high; one whose
//! neighbors all sit on one side scores near zero regardless of how many
//! there are. Points with no eligible neighbor become [`NOISE`].

use std::collections::BTreeMap;

use crate::data::Dataset;
use crate::engine::{SmallClusterPolicy, NOISE};
use crate::knn::NeighborGraph;

/// Floor applied to neighbor distances.
pub const DIST_FLOOR: f64 = 1e-12;

/// Isotropy score of one candidate cluster around a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotropyScore {
    pub cluster: i64,
    /// Neighbors belonging to `cluster`.
    pub count: usize,
    /// Norm of the summed unit vectors toward those neighbors.
    pub resultant_norm: f64,
    /// `count - resultant_norm`.
    pub isotropy: f64,
    pub min_dist: f64,
    /// `isotropy / min_dist`.
    pub score: f64,
}

/// Scores each cluster present among `neighbors` (`(label, position)`
/// pairs) around `x`. Sorted by cluster id.
///
/// A neighbor coinciding with `x` has no direction: it counts toward
/// `count` but adds nothing to the resultant.
pub fn isotropy_scores<'a>(x: &[f64], neighbors: impl IntoIterator<Item = (i64, &'a [f64])>) -> Vec<IsotropyScore> {
    struct Acc {
        count: usize,
        resultant: Vec<f64>,
        min_dist: f64,
    }
    let mut acc: BTreeMap<i64, Acc> = BTreeMap::new();
    for (label, pos) in neighbors {
        let entry = acc.entry(label).or_insert_with(|| Acc {
            count: 0,
            resultant: vec![0.0; x.len()],
            min_dist: f64::INFINITY,
        });
        let norm = pos.iter().zip(x).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
        entry.count += 1;
        entry.min_dist = entry.min_dist.min(norm.max(DIST_FLOOR));
        if norm > 0.0 {
            for (r, (p, q)) in entry.resultant.iter_mut().zip(pos.iter().zip(x)) {
                *r += (p - q) / norm;
            }
        }
    }
    acc.into_iter()
        .map(|(cluster, a)| {
            let resultant_norm = a
                .resultant
                .iter()
                .map(|r| r * r)
                .sum::<f64>()
                .sqrt()
                .min(a.count as f64);
            let isotropy = (a.count as f64 - resultant_norm).max(0.0);
            IsotropyScore {
                cluster,
                count: a.count,
                resultant_norm,
                isotropy,
                min_dist: a.min_dist,
                score: isotropy / a.min_dist,
            }
        })
        .collect()
}

/// Highest-scoring cluster; ties go to the lower cluster id.
pub fn best_cluster(scores: &[IsotropyScore]) -> Option<i64> {
    scores
        .iter()
        .fold(None::<&IsotropyScore>, |best, s| match best {
            Some(b) if b.score >= s.score => Some(b),
            _ => Some(s),
        })
        .map(|s| s.cluster)
}

/// Applies the small-cluster policy to growth-phase labels.
///
/// Cluster sizes are measured once, before any reassignment, and points only
/// move into clusters that were large at that moment. `reach` caps the
/// distance of usable neighbors. Ids are left unchanged; callers relabel.
pub fn reassign_small(
    labels: &[i64],
    ds: &Dataset,
    graph: &NeighborGraph,
    min_cluster_size: usize,
    policy: SmallClusterPolicy,
    reach: f64,
) -> Vec<i64> {
    let mut sizes: BTreeMap<i64, usize> = BTreeMap::new();
    for &l in labels.iter().filter(|&&l| l != NOISE) {
        *sizes.entry(l).or_default() += 1;
    }
    let is_large = |l: i64| l != NOISE && sizes.get(&l).is_some_and(|&s| s >= min_cluster_size);

    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            if l == NOISE || is_large(l) {
                return l;
            }
            match policy {
                SmallClusterPolicy::Noise => NOISE,
                SmallClusterPolicy::Reassign => {
                    let eligible = graph
                        .ids(i)
                        .iter()
                        .zip(graph.distances(i))
                        .filter(|&(&j, &d)| d <= reach && is_large(labels[j]))
                        .map(|(&j, _)| (labels[j], ds.row(j)));
                    best_cluster(&isotropy_scores(ds.row(i), eligible)).unwrap_or(NOISE)
                }
            }
        })
        .collect()
}
