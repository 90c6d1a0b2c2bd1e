//! EVINGCA: density-variance guided graph clustering.
//!
//! Clusters are grown breadth-first over a k-nearest-neighbor graph, seeded
//! from the densest unvisited point. Each growing cluster keeps a running mean
//! and mean absolute deviation of the neighbor distances it has absorbed, and
//! candidates whose distance deviates too far from those statistics are
//! rejected (the level-1 filter). Level 2 additionally rejects candidates
//! whose per-dimension offset pattern disagrees with the local shape measured
//! around the cluster root. Clusters that end up below a minimum size are
//! either dismantled and reassigned by angular isotropy scoring or marked as
//! noise.
//!
//! ```
//! use evingca::data::{generate, scale, ScalerKind, SyntheticKind, SyntheticSpec};
//! use evingca::engine::{cluster, EvingcaConfig};
//!
//! let ds = generate(&SyntheticSpec::new(SyntheticKind::Moons, 400, 7)).unwrap();
//! let ds = scale(&ds, ScalerKind::MinMax);
//! let out = cluster(&ds, &EvingcaConfig::default()).unwrap();
//! assert_eq!(out.labels.len(), 400);
//! ```

pub mod data;
pub mod engine;
pub mod harness;
pub mod heuristics;
pub mod knn;
pub mod metrics;
pub mod refine;

pub use data::{Dataset, ScalerKind};
pub use engine::{cluster, Clustering, EvingcaConfig, LabelArray, RunReport, NOISE};
pub use heuristics::{HeuristicSet, HeuristicsMode, Modulators};
pub use knn::{IndexKind, NeighborIndex};
