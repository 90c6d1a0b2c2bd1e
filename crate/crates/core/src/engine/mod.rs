//! The clustering core.
//!
//! [`cluster`] runs the full pipeline:
//!
//! 1. compute the dataset scale `s` and a `k`-NN graph (`k = max_neighbors`);
//! 2. score every point with the density heuristic and order roots by
//!    density, highest first (or by a seeded shuffle for random seeding);
//! 3. pop the next unvisited root and grow a cluster breadth-first. Each
//!    popped point queries its neighbors, keeps the still-unvisited ones that
//!    pass level 1 (and level 2 when enabled), folds their distances into the
//!    cluster statistics and enqueues them;
//! 4. dismantle clusters below `min_cluster_size` (see [`crate::refine`]);
//! 5. relabel surviving clusters contiguously.

mod filters;
mod stats;

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::heuristics::{HeuristicSet, HeuristicsMode, Modulators};
use crate::knn::{IndexError, IndexKind, NeighborGraph, NeighborIndex};
use crate::refine;

pub use filters::{
    dataset_scale, density_heuristic, density_of, l1_accept, l2_accept, shape_descriptor, ShapeDescriptor,
};
pub use stats::{ClusterStats, DELTA_FLOOR};

/// Label given to points outside every cluster.
pub const NOISE: i64 = -1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("invalid config: {field} {message}")]
    InvalidConfig { field: &'static str, message: String },
    #[error("clustering needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("degenerate dataset: every column is constant")]
    DegenerateDataset,
    #[error(transparent)]
    Index(#[from] IndexError),
}

impl EngineError {
    /// Config field at fault, when the error is a validation failure.
    pub fn field(&self) -> Option<&'static str> {
        match self {
            EngineError::InvalidConfig { field, .. } => Some(field),
            _ => None,
        }
    }
}

/// What happens to clusters smaller than `min_cluster_size`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmallClusterPolicy {
    /// Reassign each member to a nearby large cluster by isotropy score.
    #[default]
    Reassign,
    /// Label every member [`NOISE`].
    Noise,
}

/// Order in which cluster roots are popped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Seeding {
    /// Density descending, lower id first on ties.
    #[default]
    Ordered,
    /// Seeded shuffle. Densities are still computed for the filters.
    Random,
}

macro_rules! str_enum {
    ($ty:ty { $($variant:path => $name:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $($variant => $name),+ }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($name => Ok($variant),)+
                    other => Err(format!("unknown value {other:?}")),
                }
            }
        }
    };
}

str_enum!(SmallClusterPolicy { SmallClusterPolicy::Reassign => "reassign", SmallClusterPolicy::Noise => "noise" });
str_enum!(Seeding { Seeding::Ordered => "ordered", Seeding::Random => "random" });

/// All clustering parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvingcaConfig {
    /// 1: density-variance filter only; 2: adds the shape filter.
    pub level: u8,
    /// Tolerance for distance deviation, in `[0, 1]`.
    pub expansion: f64,
    /// Density clipping and level-1 softening, in `[0, 1]`.
    pub blur: f64,
    /// Neighbors fetched per point. Clamped to `N - 1` at run time.
    pub max_neighbors: usize,
    pub min_cluster_size: usize,
    pub small_cluster_policy: SmallClusterPolicy,
    /// Level-2 tolerance on per-dimension pattern gaps.
    pub tau: f64,
    pub heuristics: HeuristicsMode,
    pub seeding: Seeding,
    pub index: IndexKind,
    /// Seeds the accelerated index build and random seeding.
    pub seed: u64,
}

impl Default for EvingcaConfig {
    fn default() -> Self {
        Self {
            level: 1,
            expansion: 0.5,
            blur: 0.5,
            max_neighbors: 15,
            min_cluster_size: 5,
            small_cluster_policy: SmallClusterPolicy::Reassign,
            tau: 0.3,
            heuristics: HeuristicsMode::Default,
            seeding: Seeding::Ordered,
            index: IndexKind::Exact,
            seed: 42,
        }
    }
}

impl EvingcaConfig {
    /// Defaults with `min_cluster_size` sized to the dataset: 1% of `n`,
    /// at least 2.
    pub fn for_dataset(n: usize) -> Self {
        Self {
            min_cluster_size: (n / 100).max(2),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |field: &'static str, message: String| Err(EngineError::InvalidConfig { field, message });
        if !matches!(self.level, 1 | 2) {
            return bad("level", format!("must be 1 or 2, got {}", self.level));
        }
        for (field, v) in [("expansion", self.expansion), ("blur", self.blur)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(field, format!("must be in [0, 1], got {v}"));
            }
        }
        if self.max_neighbors == 0 {
            return bad("max_neighbors", "must be positive".into());
        }
        if self.min_cluster_size == 0 {
            return bad("min_cluster_size", "must be positive".into());
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return bad("tau", format!("must be finite and nonnegative, got {}", self.tau));
        }
        Ok(())
    }
}

/// Final cluster assignment: ids `0..n_clusters` or [`NOISE`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LabelArray {
    pub labels: Vec<i64>,
    pub n_clusters: usize,
}

impl LabelArray {
    /// Renumbers non-noise ids to `0..k` preserving their relative order.
    pub fn from_raw(raw: &[i64]) -> Self {
        let mut ids: Vec<i64> = raw.iter().copied().filter(|&l| l != NOISE).collect();
        ids.sort_unstable();
        ids.dedup();
        let labels = raw
            .iter()
            .map(|&l| {
                if l == NOISE {
                    NOISE
                } else {
                    ids.binary_search(&l).expect("id collected above") as i64
                }
            })
            .collect();
        Self {
            labels,
            n_clusters: ids.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Members per cluster id.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_clusters];
        for &l in &self.labels {
            if l != NOISE {
                sizes[l as usize] += 1;
            }
        }
        sizes
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NOISE).count()
    }
}

/// Summary of one [`cluster`] call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Wall time of the call, excluding data loading.
    pub runtime_s: f64,
    pub n_clusters: usize,
    pub cluster_sizes: Vec<usize>,
    pub n_noise: usize,
    /// Clusters grown before small-cluster refinement.
    pub grown_clusters: usize,
    /// `max_neighbors` after clamping to `N - 1`.
    pub neighbors_used: usize,
    pub first_root: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub labels: LabelArray,
    pub report: RunReport,
}

/// Output of the growth phase.
#[derive(Debug, Clone, PartialEq)]
pub struct Growth {
    /// Cluster id per point, in creation order.
    pub labels: Vec<i64>,
    /// Root of each cluster, in creation order.
    pub roots: Vec<usize>,
    /// Number of queue pops; equals `N` when every point is popped once.
    pub pops: usize,
}

/// Clusters `ds` with the built-in modulators selected by `cfg.heuristics`.
pub fn cluster(ds: &Dataset, cfg: &EvingcaConfig) -> Result<Clustering, EngineError> {
    cluster_with(ds, cfg, &HeuristicSet::new(cfg.heuristics))
}

/// Clusters `ds` with caller-supplied modulators (`cfg.heuristics` is
/// ignored).
pub fn cluster_with<H: Modulators + ?Sized>(
    ds: &Dataset,
    cfg: &EvingcaConfig,
    heur: &H,
) -> Result<Clustering, EngineError> {
    let start = Instant::now();
    cfg.validate()?;
    let n = ds.len();
    if n < 2 {
        return Err(EngineError::TooFewPoints(n));
    }
    let scale = dataset_scale(ds);
    if !(scale > 0.0) {
        return Err(EngineError::DegenerateDataset);
    }
    let k = cfg.max_neighbors.min(n - 1);
    let index = NeighborIndex::build(ds, cfg.index, cfg.seed)?;
    let graph = index.neighbor_graph(k)?;

    let growth = grow(ds, &graph, cfg, scale, heur);
    let reach = heur.h4(scale, ds.dim());
    let refined = refine::reassign_small(
        &growth.labels,
        ds,
        &graph,
        cfg.min_cluster_size,
        cfg.small_cluster_policy,
        reach,
    );
    let labels = LabelArray::from_raw(&refined);
    let report = RunReport {
        runtime_s: start.elapsed().as_secs_f64(),
        n_clusters: labels.n_clusters,
        cluster_sizes: labels.cluster_sizes(),
        n_noise: labels.noise_count(),
        grown_clusters: growth.roots.len(),
        neighbors_used: k,
        first_root: growth.roots[0],
    };
    Ok(Clustering { labels, report })
}

/// Densities for every point of `graph`.
pub fn densities(graph: &NeighborGraph, blur: f64, scale: f64) -> Vec<f64> {
    (0..graph.len())
        .map(|i| density_heuristic(graph.kth_distance(i), graph.k(), blur, scale))
        .collect()
}

/// Root pop order for `cfg.seeding`.
pub fn root_order(density: &[f64], seeding: Seeding, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..density.len()).collect();
    match seeding {
        Seeding::Ordered => order.sort_by(|&a, &b| density[b].total_cmp(&density[a]).then(a.cmp(&b))),
        Seeding::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1);
            order.shuffle(&mut rng);
        }
    }
    order
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Unvisited,
    Frontier,
    Member(u32),
}

/// Growth phase over a precomputed neighbor graph.
pub fn grow<H: Modulators + ?Sized>(
    ds: &Dataset,
    graph: &NeighborGraph,
    cfg: &EvingcaConfig,
    scale: f64,
    heur: &H,
) -> Growth {
    let n = ds.len();
    let density = densities(graph, cfg.blur, scale);
    let order = root_order(&density, cfg.seeding, cfg.seed);

    let mut state = vec![State::Unvisited; n];
    let mut queue = VecDeque::new();
    let mut roots = Vec::new();
    let mut accepted: Vec<(usize, f64)> = Vec::with_capacity(graph.k());
    let mut batch: Vec<f64> = Vec::with_capacity(graph.k());
    let mut pops = 0;

    for root in order {
        if state[root] != State::Unvisited {
            continue;
        }
        let id = roots.len() as u32;
        roots.push(root);
        state[root] = State::Frontier;
        queue.push_back(root);
        let shape = (cfg.level == 2).then(|| shape_descriptor(ds, root, graph.ids(root)));
        let mut stats = ClusterStats::new();
        let mut popped = 0;

        while let Some(i) = queue.pop_front() {
            state[i] = State::Member(id);
            popped += 1;
            pops += 1;

            accepted.clear();
            for (&j, &d) in graph.ids(i).iter().zip(graph.distances(i)) {
                if state[j] != State::Unvisited {
                    continue;
                }
                if !l1_accept(d, &stats, cfg.expansion, cfg.blur, density[i], heur) {
                    continue;
                }
                if let Some(shape) = &shape {
                    if !l2_accept(ds, j, i, shape, cfg.tau, heur) {
                        continue;
                    }
                }
                accepted.push((j, d));
            }
            batch.clear();
            batch.extend(accepted.iter().map(|&(_, d)| d));
            stats.update(&batch, popped, queue.len());
            for &(j, _) in &accepted {
                state[j] = State::Frontier;
                queue.push_back(j);
            }
        }
    }

    let labels = state
        .into_iter()
        .map(|s| match s {
            State::Member(c) => i64::from(c),
            _ => unreachable!("every point is popped"),
        })
        .collect();
    Growth { labels, roots, pops }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate, scale as rescale, ScalerKind, SyntheticKind, SyntheticSpec};
    use crate::metrics::ari;

    fn two_blobs() -> Dataset {
        let centers = vec![vec![0.0, 0.0], vec![10.0, 10.0]];
        let ds = crate::data::gaussian_blobs("two", 400, &centers, &[0.6, 0.6], 3).unwrap();
        rescale(&ds, ScalerKind::MinMax)
    }

    #[test]
    fn config_validation_names_field() {
        let cfg = EvingcaConfig {
            expansion: 1.5,
            ..Default::default()
        };
        assert_eq!(cfg.validate().unwrap_err().field(), Some("expansion"));
        let cfg = EvingcaConfig {
            level: 3,
            ..Default::default()
        };
        assert_eq!(cfg.validate().unwrap_err().field(), Some("level"));
        let cfg = EvingcaConfig {
            tau: -0.1,
            ..Default::default()
        };
        assert_eq!(cfg.validate().unwrap_err().field(), Some("tau"));
    }

    #[test]
    fn config_json_defaults_and_unknown_fields() {
        let cfg: EvingcaConfig = serde_json::from_str(r#"{"expansion": 0.25, "index": "accelerated"}"#).unwrap();
        assert_eq!(cfg.expansion, 0.25);
        assert_eq!(cfg.index, IndexKind::Accelerated);
        assert_eq!(cfg.blur, 0.5);
        assert!(serde_json::from_str::<EvingcaConfig>(r#"{"expanse": 0.25}"#).is_err());
    }

    #[test]
    fn degenerate_and_tiny_inputs() {
        let flat = Dataset::from_rows("f", &[vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]], None).unwrap();
        assert_eq!(
            cluster(&flat, &EvingcaConfig::default()).unwrap_err(),
            EngineError::DegenerateDataset
        );
        let one = Dataset::from_rows("o", &[vec![1.0]], None).unwrap();
        assert_eq!(
            cluster(&one, &EvingcaConfig::default()).unwrap_err(),
            EngineError::TooFewPoints(1)
        );
    }

    #[test]
    fn separates_two_blobs() {
        let ds = two_blobs();
        let out = cluster(&ds, &EvingcaConfig::for_dataset(ds.len())).unwrap();
        assert_eq!(out.labels.n_clusters, 2);
        assert_eq!(ari(ds.labels().unwrap(), &out.labels.labels).unwrap(), 1.0);
        assert_eq!(out.report.cluster_sizes.iter().sum::<usize>(), 400);
    }

    #[test]
    fn zero_expansion_fragments() {
        let ds = two_blobs();
        let cfg = EvingcaConfig {
            expansion: 0.0,
            blur: 0.0,
            min_cluster_size: 1,
            small_cluster_policy: SmallClusterPolicy::Noise,
            ..Default::default()
        };
        let out = cluster(&ds, &cfg).unwrap();
        assert!(out.labels.n_clusters >= ds.len() / 2);
    }

    #[test]
    fn first_root_is_densest() {
        let ds = rescale(
            &generate(&SyntheticSpec::new(SyntheticKind::DensityGradient, 300, 1)).unwrap(),
            ScalerKind::MinMax,
        );
        let cfg = EvingcaConfig {
            blur: 0.0,
            ..Default::default()
        };
        let idx = NeighborIndex::build(&ds, IndexKind::Exact, 0).unwrap();
        let graph = idx.neighbor_graph(cfg.max_neighbors).unwrap();
        let dens = densities(&graph, 0.0, dataset_scale(&ds));
        let best = (0..ds.len())
            .max_by(|&a, &b| dens[a].total_cmp(&dens[b]).then(b.cmp(&a)))
            .unwrap();
        let out = cluster(&ds, &cfg).unwrap();
        assert_eq!(out.report.first_root, best);
    }

    #[test]
    fn every_point_popped_once() {
        let ds = two_blobs();
        for level in [1, 2] {
            let cfg = EvingcaConfig {
                level,
                ..Default::default()
            };
            let idx = NeighborIndex::build(&ds, IndexKind::Exact, 0).unwrap();
            let graph = idx.neighbor_graph(cfg.max_neighbors).unwrap();
            let g = grow(&ds, &graph, &cfg, dataset_scale(&ds), &HeuristicSet::default());
            assert_eq!(g.pops, ds.len());
            assert_eq!(g.labels.len(), ds.len());
            for (c, &r) in g.roots.iter().enumerate() {
                assert_eq!(g.labels[r], c as i64);
            }
        }
    }

    #[test]
    fn random_seeding_is_seed_deterministic() {
        let ds = two_blobs();
        let cfg = EvingcaConfig {
            seeding: Seeding::Random,
            seed: 5,
            ..Default::default()
        };
        assert_eq!(cluster(&ds, &cfg).unwrap().labels, cluster(&ds, &cfg).unwrap().labels);
    }

    #[test]
    fn relabel_is_contiguous() {
        let l = LabelArray::from_raw(&[4, NOISE, 9, 4, 2]);
        assert_eq!(l.labels, vec![1, NOISE, 2, 1, 0]);
        assert_eq!(l.n_clusters, 3);
        assert_eq!(l.cluster_sizes(), vec![1, 2, 1]);
        assert_eq!(l.noise_count(), 1);
    }
}
