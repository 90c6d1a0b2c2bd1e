//! Ablation arms: each one changes a single factor relative to the baseline
//! (min-max scaling, both small-cluster policies searched, ordered seeding,
//! default modulators), reruns the full random search, then reruns the
//! selected configuration to report its spread.

use serde::Serialize;

use super::stats::{mean_std, wilcoxon_holm, HolmRow, MIN_PAIRS};
use super::{random_search, stability, HarnessError, SearchBudget, SearchSpace, TrialLog};
use crate::data::{scale, Dataset, ScalerKind};
use crate::engine::{EvingcaConfig, Seeding, SmallClusterPolicy};
use crate::heuristics::HeuristicsMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "arm", content = "value", rename_all = "snake_case")]
pub enum Arm {
    Baseline,
    Scaler(ScalerKind),
    /// Small clusters always become noise.
    PolicyNoise,
    RandomSeeding,
    /// Modulators reduced to pass-throughs.
    IdentityHeuristics,
}

impl Arm {
    /// Every non-baseline arm.
    pub const ALL: [Arm; 5] = [
        Arm::Scaler(ScalerKind::Standard),
        Arm::Scaler(ScalerKind::None),
        Arm::PolicyNoise,
        Arm::RandomSeeding,
        Arm::IdentityHeuristics,
    ];

    pub fn name(&self) -> String {
        match self {
            Arm::Baseline => "baseline".into(),
            Arm::Scaler(s) => format!("scaler={}", s.as_str()),
            Arm::PolicyNoise => "policy=noise".into(),
            Arm::RandomSeeding => "seeding=random".into(),
            Arm::IdentityHeuristics => "heuristics=identity".into(),
        }
    }

    /// Scaled data, trial-1 config and search space for this arm. `raw`
    /// must be unscaled.
    pub fn setup(&self, raw: &Dataset, base: &EvingcaConfig) -> (Dataset, EvingcaConfig, SearchSpace) {
        let scaler = match self {
            Arm::Scaler(s) => *s,
            _ => ScalerKind::MinMax,
        };
        let ds = scale(raw, scaler);
        let mut cfg = base.clone();
        let mut space = SearchSpace::for_dataset(ds.len());
        match self {
            Arm::PolicyNoise => {
                cfg.small_cluster_policy = SmallClusterPolicy::Noise;
                space.policies = vec![SmallClusterPolicy::Noise];
            }
            Arm::RandomSeeding => cfg.seeding = Seeding::Random,
            Arm::IdentityHeuristics => cfg.heuristics = HeuristicsMode::Identity,
            Arm::Baseline | Arm::Scaler(_) => {}
        }
        (ds, cfg, space)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub dataset: String,
    pub arm: String,
    pub best_ari: f64,
    pub best_config: EvingcaConfig,
    /// ARI of the selected config over `budget.reruns` seeds.
    pub rerun_mean: f64,
    pub rerun_std: f64,
    pub trials: usize,
}

/// Runs the baseline and then each of `arms` on one unscaled dataset.
pub fn ablate(raw: &Dataset, arms: &[Arm], budget: &SearchBudget, seed: u64) -> Result<Vec<AblationRow>, HarnessError> {
    std::iter::once(&Arm::Baseline)
        .chain(arms.iter().filter(|a| **a != Arm::Baseline))
        .map(|arm| run_arm(raw, *arm, budget, seed).map(|(row, _)| row))
        .collect()
}

fn run_arm(raw: &Dataset, arm: Arm, budget: &SearchBudget, seed: u64) -> Result<(AblationRow, TrialLog), HarnessError> {
    let (ds, base, space) = arm.setup(raw, &EvingcaConfig::for_dataset(raw.len()));
    let search = random_search(&ds, &base, &space, budget, seed)?;
    let reruns = stability(&ds, &search.best, budget.reruns, search.best.seed)?;
    let (rerun_mean, rerun_std) = mean_std(&reruns.aris);
    Ok((
        AblationRow {
            dataset: raw.name().to_string(),
            arm: arm.name(),
            best_ari: search.best_ari,
            best_config: search.best,
            rerun_mean,
            rerun_std,
            trials: search.log.len(),
        },
        search.log,
    ))
}

/// A dataset entered into an ablation study. Development datasets are
/// ablated like the others but left out of the significance tests.
#[derive(Debug, Clone)]
pub struct AblationDataset {
    pub data: Dataset,
    pub development: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationReport {
    pub rows: Vec<AblationRow>,
    /// Baseline vs each arm over the non-development datasets; `None` when
    /// fewer than [`MIN_PAIRS`] such datasets exist.
    pub tests: Option<Vec<HolmRow>>,
    pub alpha: f64,
}

/// Ablates every dataset, then tests baseline best ARI against each arm's
/// best ARI, paired by dataset, with Holm correction at `alpha`.
pub fn ablate_many(
    datasets: &[AblationDataset],
    arms: &[Arm],
    budget: &SearchBudget,
    seed: u64,
    alpha: f64,
) -> Result<AblationReport, HarnessError> {
    let mut rows = Vec::new();
    let mut per_dataset = Vec::new();
    for d in datasets {
        let r = ablate(&d.data, arms, budget, seed)?;
        if !d.development {
            per_dataset.push(r.clone());
        }
        rows.extend(r);
    }
    let tests = if per_dataset.len() >= MIN_PAIRS {
        let arm_names: Vec<String> = per_dataset[0][1..].iter().map(|r| r.arm.clone()).collect();
        let comparisons: Vec<(String, Vec<(f64, f64)>)> = arm_names
            .iter()
            .enumerate()
            .map(|(a, name)| {
                let pairs = per_dataset.iter().map(|r| (r[0].best_ari, r[a + 1].best_ari)).collect();
                (name.clone(), pairs)
            })
            .collect();
        Some(wilcoxon_holm(&comparisons, alpha)?)
    } else {
        None
    };
    Ok(AblationReport { rows, tests, alpha })
}
