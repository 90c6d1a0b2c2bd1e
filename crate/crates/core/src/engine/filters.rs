//! Per-point quantities used during growth: dataset scale, density ordering
//! key, local shape descriptor, and the two acceptance filters.

use super::stats::ClusterStats;
use crate::data::Dataset;
use crate::heuristics::Modulators;
use crate::knn::{IndexError, NeighborIndex};

/// Sum over columns of the squared column range.
pub fn dataset_scale(ds: &Dataset) -> f64 {
    ds.column_ranges().iter().map(|(lo, hi)| (hi - lo) * (hi - lo)).sum()
}

/// `k / max(d_k, blur * sqrt(scale))`.
///
/// A zero denominator (duplicate points with `blur = 0`) yields
/// `f64::MAX`, so such points sort first.
pub fn density_heuristic(kth_distance: f64, k: usize, blur: f64, scale: f64) -> f64 {
    let clipped = kth_distance.max(blur * scale.sqrt());
    if clipped > 0.0 {
        k as f64 / clipped
    } else {
        f64::MAX
    }
}

/// [`density_heuristic`] for one indexed point.
pub fn density_of(index: &NeighborIndex<'_>, i: usize, blur: f64, scale: f64, k: usize) -> Result<f64, IndexError> {
    let batch = index.query(i, k)?;
    Ok(density_heuristic(batch.distances[k - 1], k, blur, scale))
}

/// Mean absolute per-dimension pairwise difference over a cluster root and
/// its neighbors, plus its normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeDescriptor {
    pub psi: Vec<f64>,
    /// `psi / sum(psi)`; `None` when every member coincides.
    pub weights: Option<Vec<f64>>,
}

impl ShapeDescriptor {
    pub fn is_degenerate(&self) -> bool {
        self.weights.is_none()
    }
}

/// Shape around `root` measured over `root` plus `neighbors`.
pub fn shape_descriptor(ds: &Dataset, root: usize, neighbors: &[usize]) -> ShapeDescriptor {
    let members: Vec<&[f64]> = std::iter::once(root)
        .chain(neighbors.iter().copied())
        .map(|i| ds.row(i))
        .collect();
    let mut psi = vec![0.0; ds.dim()];
    for (a, first) in members.iter().enumerate() {
        for second in &members[a + 1..] {
            for (p, (x, y)) in psi.iter_mut().zip(first.iter().zip(second.iter())) {
                *p += (x - y).abs();
            }
        }
    }
    let m = members.len() as f64;
    let pairs = m * (m - 1.0) / 2.0;
    if pairs > 0.0 {
        psi.iter_mut().for_each(|p| *p /= pairs);
    }
    let total: f64 = psi.iter().sum();
    let weights = (total > 0.0).then(|| psi.iter().map(|p| p / total).collect());
    ShapeDescriptor { psi, weights }
}

/// Level-1 test: accept unless `h1(z, blur) > h2(expansion, density)` with
/// `z` the candidate distance standardized by the cluster statistics.
pub fn l1_accept<H: Modulators + ?Sized>(
    distance: f64,
    stats: &ClusterStats,
    expansion: f64,
    blur: f64,
    density: f64,
    heur: &H,
) -> bool {
    heur.h1(stats.standardize(distance), blur) <= heur.h2(expansion, density)
}

/// Level-2 test: the per-dimension share of `|candidate - reference|` must
/// match the cluster's shape weights within `tau` in every dimension.
/// Degenerate shapes and coincident points always pass.
pub fn l2_accept<H: Modulators + ?Sized>(
    ds: &Dataset,
    candidate: usize,
    reference: usize,
    shape: &ShapeDescriptor,
    tau: f64,
    heur: &H,
) -> bool {
    let Some(w) = &shape.weights else {
        return true;
    };
    let (b, a) = (ds.row(candidate), ds.row(reference));
    let total: f64 = b.iter().zip(a).map(|(x, y)| (x - y).abs()).sum();
    if total == 0.0 {
        return true;
    }
    b.iter()
        .zip(a)
        .zip(w)
        .all(|((x, y), wj)| heur.h3(((x - y).abs() / total - wj).abs()) <= tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heuristics::{HeuristicSet, HeuristicsMode};

    const ID: HeuristicSet = HeuristicSet {
        mode: HeuristicsMode::Identity,
    };
    const DEF: HeuristicSet = HeuristicSet {
        mode: HeuristicsMode::Default,
    };

    fn ds(rows: &[[f64; 2]]) -> Dataset {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        Dataset::from_rows("t", &rows, None).unwrap()
    }

    #[test]
    fn scale_is_sum_of_squared_ranges() {
        assert_eq!(
            dataset_scale(&ds(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])),
            2.0
        );
        let one = Dataset::from_rows("t", &[vec![1.0], vec![4.0], vec![2.0]], None).unwrap();
        assert_eq!(dataset_scale(&one), 9.0);
        assert_eq!(dataset_scale(&ds(&[[3.0, 3.0], [3.0, 3.0]])), 0.0);
    }

    #[test]
    fn density_values() {
        assert!((density_heuristic(0.2, 10, 0.0, 2.0) - 50.0).abs() < 1e-12);
        let a = density_heuristic(0.05, 10, 1.0, 2.0);
        let b = density_heuristic(0.9, 10, 1.0, 2.0);
        assert_eq!(a, b);
        assert_eq!(a, 10.0 / 2f64.sqrt());
        assert_eq!(density_heuristic(0.0, 10, 0.0, 2.0), f64::MAX);
    }

    #[test]
    fn shape_single_pair() {
        let d = ds(&[[0.0, 0.0], [3.0, 4.0]]);
        let s = shape_descriptor(&d, 0, &[1]);
        assert_eq!(s.psi, vec![3.0, 4.0]);
        assert_eq!(s.weights, Some(vec![3.0 / 7.0, 4.0 / 7.0]));
    }

    #[test]
    fn shape_collinear_triple() {
        let d = ds(&[[0.0, 5.0], [1.0, 5.0], [2.0, 5.0]]);
        let s = shape_descriptor(&d, 1, &[0, 2]);
        assert!((s.psi[0] - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.psi[1], 0.0);
        assert_eq!(s.weights, Some(vec![1.0, 0.0]));
    }

    #[test]
    fn shape_degenerate() {
        let d = ds(&[[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]]);
        assert!(shape_descriptor(&d, 0, &[1, 2]).is_degenerate());
    }

    #[test]
    fn l1_identity_boundary() {
        let stats = ClusterStats {
            mu: 0.1,
            delta: 0.02,
            count: 5,
        };
        // z = 1, on the threshold
        assert!(l1_accept(0.12, &stats, 1.0, 0.0, 1.0, &ID));
        assert!(!l1_accept(0.2, &stats, 1.0, 0.0, 1.0, &ID));
    }

    #[test]
    fn l1_default_full_blur_accepts_everything() {
        let stats = ClusterStats {
            mu: 0.01,
            delta: 1e-9,
            count: 3,
        };
        for e in [0.0, 0.3, 1.0] {
            for d in [0.0, 0.5, 1e6] {
                assert!(l1_accept(d, &stats, e, 1.0, 3.0, &DEF));
            }
        }
    }

    fn shape(w: [f64; 2]) -> ShapeDescriptor {
        ShapeDescriptor {
            psi: w.to_vec(),
            weights: Some(w.to_vec()),
        }
    }

    #[test]
    fn l2_cases() {
        let d = ds(&[[0.0, 0.0], [0.5, 0.0], [0.0, 0.5], [0.3, 0.1]]);
        assert!(l2_accept(&d, 1, 0, &shape([1.0, 0.0]), 0.0, &DEF));
        assert!(!l2_accept(&d, 2, 0, &shape([1.0, 0.0]), 0.3, &DEF));
        // p = (0.75, 0.25): gap 0.25
        assert!(l2_accept(&d, 3, 0, &shape([0.5, 0.5]), 0.3, &DEF));
        assert!(!l2_accept(&d, 3, 0, &shape([0.5, 0.5]), 0.2, &DEF));
    }

    #[test]
    fn l2_coincident_and_degenerate_accept() {
        let d = ds(&[[0.2, 0.2], [0.2, 0.2], [0.0, 0.9]]);
        assert!(l2_accept(&d, 1, 0, &shape([1.0, 0.0]), 0.0, &DEF));
        let flat = ShapeDescriptor {
            psi: vec![0.0, 0.0],
            weights: None,
        };
        assert!(l2_accept(&d, 2, 0, &flat, 0.0, &DEF));
    }
}
