//! k-nearest-neighbor retrieval over a frozen [`Dataset`].
//!
//! Two index kinds answer the same query contract: an exact brute-force scan
//! and an accelerated HNSW graph. Results exclude the query point, are sorted
//! by ascending Euclidean distance and break distance ties by ascending id.

mod hnsw;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;

use hnsw::Hnsw;
pub use hnsw::HnswParams;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IndexError {
    #[error("an index needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("point id {id} out of range for {n} points")]
    PointOutOfRange { id: usize, n: usize },
    #[error("k = {k} out of range (must be in 1..={max})")]
    KOutOfRange { k: usize, max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexKind {
    #[default]
    Exact,
    /// HNSW graph; see [`HnswParams`] for the build options.
    Accelerated,
}

impl IndexKind {
    pub fn as_str(self) -> &'static str {
        match self {
            IndexKind::Exact => "exact",
            IndexKind::Accelerated => "accelerated",
        }
    }
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IndexKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(IndexKind::Exact),
            "accelerated" => Ok(IndexKind::Accelerated),
            other => Err(format!("unknown index kind {other:?}")),
        }
    }
}

/// Neighbors of one query point, nearest first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NeighborBatch {
    pub ids: Vec<usize>,
    pub distances: Vec<f64>,
}

impl NeighborBatch {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Squared Euclidean distance.
#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

/// Orders `(distance, id)` pairs: nearer first, lower id on ties.
#[inline]
pub(crate) fn by_dist_then_id(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

enum Backend {
    Exact,
    Hnsw(Hnsw),
}

/// Immutable k-NN index borrowing its dataset.
pub struct NeighborIndex<'a> {
    data: &'a Dataset,
    kind: IndexKind,
    build_seed: u64,
    backend: Backend,
}

impl<'a> NeighborIndex<'a> {
    /// Builds an index with default HNSW options.
    pub fn build(data: &'a Dataset, kind: IndexKind, seed: u64) -> Result<Self, IndexError> {
        Self::build_with(data, kind, seed, HnswParams::default())
    }

    pub fn build_with(data: &'a Dataset, kind: IndexKind, seed: u64, params: HnswParams) -> Result<Self, IndexError> {
        if data.len() < 2 {
            return Err(IndexError::TooFewPoints(data.len()));
        }
        let backend = match kind {
            IndexKind::Exact => Backend::Exact,
            IndexKind::Accelerated => Backend::Hnsw(Hnsw::build(data, params, seed)),
        };
        Ok(Self {
            data,
            kind,
            build_seed: seed,
            backend,
        })
    }

    pub fn kind(&self) -> IndexKind {
        self.kind
    }

    pub fn build_seed(&self) -> u64 {
        self.build_seed
    }

    pub fn dataset(&self) -> &'a Dataset {
        self.data
    }

    /// The `k` nearest neighbors of `point_id`, excluding itself.
    pub fn query(&self, point_id: usize, k: usize) -> Result<NeighborBatch, IndexError> {
        let n = self.data.len();
        if point_id >= n {
            return Err(IndexError::PointOutOfRange { id: point_id, n });
        }
        if k == 0 || k > n - 1 {
            return Err(IndexError::KOutOfRange { k, max: n - 1 });
        }
        let pairs = match &self.backend {
            Backend::Exact => exact_knn(self.data, point_id, k),
            Backend::Hnsw(h) => {
                let mut found = h.search(self.data, point_id, k);
                if found.len() < k {
                    // the graph could not reach enough points; complete exactly
                    found = exact_knn(self.data, point_id, k);
                }
                found
            }
        };
        let (distances, ids) = pairs.into_iter().map(|(d2, id)| (d2.sqrt(), id)).unzip();
        Ok(NeighborBatch { ids, distances })
    }

    /// Queries every point for its `k` nearest neighbors.
    pub fn neighbor_graph(&self, k: usize) -> Result<NeighborGraph, IndexError> {
        let n = self.data.len();
        if k == 0 || k > n - 1 {
            return Err(IndexError::KOutOfRange { k, max: n - 1 });
        }
        let rows: Vec<NeighborBatch> = (0..n)
            .into_par_iter()
            .map(|i| self.query(i, k))
            .collect::<Result<_, _>>()?;
        let mut ids = Vec::with_capacity(n * k);
        let mut distances = Vec::with_capacity(n * k);
        for r in rows {
            ids.extend(r.ids);
            distances.extend(r.distances);
        }
        Ok(NeighborGraph { k, ids, distances })
    }
}

/// Precomputed `k`-NN lists for every point, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    k: usize,
    ids: Vec<usize>,
    distances: Vec<f64>,
}

impl NeighborGraph {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.ids.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self, i: usize) -> &[usize] {
        &self.ids[i * self.k..(i + 1) * self.k]
    }

    pub fn distances(&self, i: usize) -> &[f64] {
        &self.distances[i * self.k..(i + 1) * self.k]
    }

    /// Distance from `i` to its `k`-th (farthest stored) neighbor.
    pub fn kth_distance(&self, i: usize) -> f64 {
        self.distances[(i + 1) * self.k - 1]
    }
}

/// Brute-force scan returning `(squared distance, id)` pairs.
fn exact_knn(data: &Dataset, query: usize, k: usize) -> Vec<(f64, usize)> {
    let q = data.row(query);
    let mut all: Vec<(f64, usize)> = data
        .rows()
        .enumerate()
        .filter(|&(j, _)| j != query)
        .map(|(j, r)| (sq_dist(q, r), j))
        .collect();
    if k < all.len() {
        all.select_nth_unstable_by(k - 1, by_dist_then_id);
        all.truncate(k);
    }
    all.sort_unstable_by(by_dist_then_id);
    all
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square() -> Dataset {
        Dataset::from_rows(
            "sq",
            &[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
            None,
        )
        .unwrap()
    }

    fn random_cloud(n: usize, d: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..n * d).map(|_| rng.random::<f64>()).collect();
        Dataset::new("r", v, d, None).unwrap()
    }

    #[test]
    fn unit_square_corners() {
        let ds = square();
        let idx = NeighborIndex::build(&ds, IndexKind::Exact, 0).unwrap();
        let b = idx.query(0, 2).unwrap();
        assert_eq!(b.ids, vec![1, 2]);
        assert_eq!(b.distances, vec![1.0, 1.0]);
        let b = idx.query(0, 3).unwrap();
        assert_eq!(b.ids[2], 3);
        assert!((b.distances[2] - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn collinear_tie_breaks_by_id() {
        let ds = Dataset::from_rows("l", &[vec![2.0], vec![1.0], vec![0.0]], None).unwrap();
        let idx = NeighborIndex::build(&ds, IndexKind::Exact, 0).unwrap();
        let b = idx.query(1, 2).unwrap();
        assert_eq!(b.ids, vec![0, 2]);
        assert_eq!(b.distances, vec![1.0, 1.0]);
    }

    #[test]
    fn two_points_minimal_instance() {
        let ds = Dataset::from_rows("two", &[vec![0.0], vec![3.0]], None).unwrap();
        for kind in [IndexKind::Exact, IndexKind::Accelerated] {
            let idx = NeighborIndex::build(&ds, kind, 1).unwrap();
            assert_eq!(idx.query(0, 1).unwrap().ids, vec![1]);
            assert_eq!(idx.query(1, 1).unwrap().distances, vec![3.0]);
        }
    }

    #[test]
    fn errors() {
        let one = Dataset::from_rows("one", &[vec![0.0]], None).unwrap();
        assert_eq!(
            NeighborIndex::build(&one, IndexKind::Exact, 0).err(),
            Some(IndexError::TooFewPoints(1))
        );
        let ds = square();
        let idx = NeighborIndex::build(&ds, IndexKind::Exact, 0).unwrap();
        assert_eq!(idx.query(0, 4).unwrap_err(), IndexError::KOutOfRange { k: 4, max: 3 });
        assert_eq!(idx.query(0, 0).unwrap_err(), IndexError::KOutOfRange { k: 0, max: 3 });
        assert_eq!(
            idx.query(9, 1).unwrap_err(),
            IndexError::PointOutOfRange { id: 9, n: 4 }
        );
    }

    #[test]
    fn exact_distances_match_rows() {
        let ds = random_cloud(60, 4, 2);
        let idx = NeighborIndex::build(&ds, IndexKind::Exact, 0).unwrap();
        for i in 0..ds.len() {
            let b = idx.query(i, 7).unwrap();
            assert!(!b.ids.contains(&i));
            for (&j, &d) in b.ids.iter().zip(&b.distances) {
                assert!((d - dist(ds.row(i), ds.row(j))).abs() <= 1e-9);
            }
            assert!(b.distances.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn accelerated_recall_on_small_cloud() {
        let ds = random_cloud(50, 3, 9);
        let exact = NeighborIndex::build(&ds, IndexKind::Exact, 0).unwrap();
        let fast = NeighborIndex::build(&ds, IndexKind::Accelerated, 4).unwrap();
        for i in 0..ds.len() {
            let e = exact.query(i, 10).unwrap().ids;
            let a = fast.query(i, 10).unwrap().ids;
            let hits = a.iter().filter(|id| e.contains(id)).count();
            assert!(hits >= 9, "point {i}: {hits}/10");
        }
    }

    #[test]
    fn accelerated_build_is_deterministic() {
        let ds = random_cloud(400, 5, 3);
        let a = NeighborIndex::build(&ds, IndexKind::Accelerated, 17).unwrap();
        let b = NeighborIndex::build(&ds, IndexKind::Accelerated, 17).unwrap();
        assert_eq!(a.neighbor_graph(12).unwrap(), b.neighbor_graph(12).unwrap());
    }

    #[test]
    fn graph_rows_match_queries() {
        let ds = random_cloud(80, 2, 5);
        let idx = NeighborIndex::build(&ds, IndexKind::Exact, 0).unwrap();
        let g = idx.neighbor_graph(5).unwrap();
        assert_eq!(g.len(), 80);
        for i in [0, 17, 79] {
            let b = idx.query(i, 5).unwrap();
            assert_eq!(g.ids(i), &b.ids[..]);
            assert_eq!(g.distances(i), &b.distances[..]);
            assert_eq!(g.kth_distance(i), b.distances[4]);
        }
    }
}
