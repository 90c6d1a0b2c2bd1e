//! Evaluation machinery: budgeted random search over the configuration
//! space, anytime curves, stability reruns, ablations and paired
//! significance tests.
//!
//! Search trials run sequentially so that per-trial runtimes are not
//! distorted by sibling trials and the wall-clock budget is checked between
//! trials. A search may therefore overshoot `max_seconds` by at most one
//! trial.

mod ablation;
mod io;
mod stats;

use std::ops::RangeInclusive;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::engine::{cluster, EngineError, EvingcaConfig, SmallClusterPolicy};
use crate::metrics::{ari, nmi, MetricError};

pub use ablation::{ablate, ablate_many, AblationDataset, AblationReport, AblationRow, Arm};
pub use io::{summarize, write_trial_jsonl, TrialLine, TrialSummary, SCHEMA_VERSION};
pub use stats::{
    average_ranks, holm, mean_std, wilcoxon_holm, wilcoxon_signed_rank, HolmRow, PMethod, Wilcoxon, EXACT_MAX_N,
    MIN_PAIRS,
};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("dataset {0:?} has no ground-truth labels")]
    MissingTruth(String),
    #[error("invalid budget: {0}")]
    InvalidBudget(&'static str),
    #[error("comparison {name:?} needs at least {min} pairs, got {got}")]
    TooFewPairs { name: String, min: usize, got: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Limits of one search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub max_trials: usize,
    /// Checked before each trial; the first trial always runs.
    pub max_seconds: f64,
    /// Reruns of the selected configuration in stability and ablation
    /// reporting.
    pub reruns: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            max_trials: 51,
            max_seconds: 120.0,
            reruns: 10,
        }
    }
}

impl SearchBudget {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.max_trials == 0 {
            return Err(HarnessError::InvalidBudget("max_trials must be positive"));
        }
        if !(self.max_seconds > 0.0) {
            return Err(HarnessError::InvalidBudget("max_seconds must be positive"));
        }
        if self.reruns == 0 {
            return Err(HarnessError::InvalidBudget("reruns must be positive"));
        }
        Ok(())
    }
}

/// Ranges sampled uniformly by [`random_search`]. Fields not listed here
/// (heuristics, seeding, index, seed) are taken from the base config.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchSpace {
    pub levels: Vec<u8>,
    pub expansion: RangeInclusive<f64>,
    pub blur: RangeInclusive<f64>,
    pub max_neighbors: RangeInclusive<usize>,
    pub min_cluster_size: RangeInclusive<usize>,
    pub policies: Vec<SmallClusterPolicy>,
    pub tau: RangeInclusive<f64>,
}

impl SearchSpace {
    /// Full space for a dataset of `n` points: `max_neighbors` in
    /// `[3, min(60, n - 1)]` and `min_cluster_size` in `[1, max(1, n / 10)]`.
    pub fn for_dataset(n: usize) -> Self {
        let m_hi = 60.min(n.saturating_sub(1)).max(1);
        Self {
            levels: vec![1, 2],
            expansion: 0.0..=1.0,
            blur: 0.0..=1.0,
            max_neighbors: 3.min(m_hi)..=m_hi,
            min_cluster_size: 1..=(n / 10).max(1),
            policies: vec![SmallClusterPolicy::Reassign, SmallClusterPolicy::Noise],
            tau: 0.05..=1.0,
        }
    }

    /// Draws one configuration, copying unsampled fields from `base`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, base: &EvingcaConfig) -> EvingcaConfig {
        EvingcaConfig {
            level: self.levels[rng.random_range(0..self.levels.len())],
            expansion: rng.random_range(self.expansion.clone()),
            blur: rng.random_range(self.blur.clone()),
            max_neighbors: rng.random_range(self.max_neighbors.clone()),
            min_cluster_size: rng.random_range(self.min_cluster_size.clone()),
            small_cluster_policy: self.policies[rng.random_range(0..self.policies.len())],
            tau: rng.random_range(self.tau.clone()),
            ..base.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    /// 1-based.
    pub trial_index: usize,
    pub config: EvingcaConfig,
    pub ari: f64,
    pub nmi: f64,
    pub runtime_s: f64,
    pub n_clusters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialLog {
    pub dataset: String,
    pub search_seed: u64,
    pub records: Vec<TrialRecord>,
}

impl TrialLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Highest-ARI record; the earliest wins ties.
    pub fn best(&self) -> Option<&TrialRecord> {
        self.records.iter().fold(None::<&TrialRecord>, |best, r| match best {
            Some(b) if b.ari >= r.ari => Some(b),
            _ => Some(r),
        })
    }

    pub fn aris(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.ari).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchOutcome {
    pub best: EvingcaConfig,
    pub best_ari: f64,
    pub log: TrialLog,
}

/// Scores one configuration against the dataset's own labels.
pub fn evaluate(ds: &Dataset, cfg: &EvingcaConfig) -> Result<(f64, f64, f64, usize), HarnessError> {
    let truth = truth_of(ds)?;
    let out = cluster(ds, cfg)?;
    Ok((
        ari(truth, &out.labels.labels)?,
        nmi(truth, &out.labels.labels)?,
        out.report.runtime_s,
        out.labels.n_clusters,
    ))
}

fn truth_of(ds: &Dataset) -> Result<&[i64], HarnessError> {
    ds.labels()
        .ok_or_else(|| HarnessError::MissingTruth(ds.name().to_string()))
}

/// Random search scored by ARI against `ds`'s labels.
///
/// Trial 1 evaluates `base` unchanged; later trials draw from `space` with a
/// generator seeded by `seed`. Stops after `budget.max_trials` trials or once
/// `budget.max_seconds` have elapsed, whichever comes first.
pub fn random_search(
    ds: &Dataset,
    base: &EvingcaConfig,
    space: &SearchSpace,
    budget: &SearchBudget,
    seed: u64,
) -> Result<SearchOutcome, HarnessError> {
    budget.validate()?;
    truth_of(ds)?;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(budget.max_trials);
    for trial_index in 1..=budget.max_trials {
        if trial_index > 1 && start.elapsed().as_secs_f64() >= budget.max_seconds {
            break;
        }
        let config = if trial_index == 1 {
            base.clone()
        } else {
            space.sample(&mut rng, base)
        };
        let (ari, nmi, runtime_s, n_clusters) = evaluate(ds, &config)?;
        records.push(TrialRecord {
            trial_index,
            config,
            ari,
            nmi,
            runtime_s,
            n_clusters,
        });
    }
    let log = TrialLog {
        dataset: ds.name().to_string(),
        search_seed: seed,
        records,
    };
    let best = log.best().expect("at least one trial runs");
    Ok(SearchOutcome {
        best: best.config.clone(),
        best_ari: best.ari,
        log,
    })
}

/// Best-so-far ARI after each trial, as `(trial_index, ari)`.
pub fn anytime_curve(log: &TrialLog) -> Vec<(usize, f64)> {
    let mut best = f64::NEG_INFINITY;
    log.records
        .iter()
        .map(|r| {
            best = best.max(r.ari);
            (r.trial_index, best)
        })
        .collect()
}

/// First trial after which the curve improves by at most `tolerance` more.
pub fn plateau_trial(curve: &[(usize, f64)], tolerance: f64) -> Option<usize> {
    let (_, last) = *curve.last()?;
    curve.iter().find(|(_, v)| last - v <= tolerance).map(|(t, _)| *t)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stability {
    pub aris: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single run.
    pub std: f64,
}

/// Reruns `cfg` with seeds `base_seed + run` for `run` in `0..runs`.
pub fn stability(ds: &Dataset, cfg: &EvingcaConfig, runs: usize, base_seed: u64) -> Result<Stability, HarnessError> {
    let aris = (0..runs as u64)
        .map(|run| {
            let cfg = EvingcaConfig {
                seed: base_seed.wrapping_add(run),
                ..cfg.clone()
            };
            evaluate(ds, &cfg).map(|(a, ..)| a)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let (mean, std) = mean_std(&aris);
    Ok(Stability { aris, mean, std })
}
