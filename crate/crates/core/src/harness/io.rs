//! On-disk result formats.
//!
//! A search is stored as JSON lines, one [`TrialLine`] per trial in trial
//! order, plus one [`TrialSummary`] JSON document. Both carry
//! `schema_version`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{anytime_curve, plateau_trial, HarnessError, TrialLog};
use crate::engine::EvingcaConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Improvement tolerance used for the plateau in [`TrialSummary`].
pub const PLATEAU_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialLine {
    pub schema_version: u32,
    pub dataset: String,
    pub trial: usize,
    pub config: EvingcaConfig,
    pub ari: f64,
    pub nmi: f64,
    pub runtime_s: f64,
    pub n_clusters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub schema_version: u32,
    pub dataset: String,
    pub search_seed: u64,
    pub trials: usize,
    pub best_trial: usize,
    pub best_ari: f64,
    pub best_nmi: f64,
    pub best_config: EvingcaConfig,
    /// Best-so-far ARI after each trial.
    pub anytime: Vec<f64>,
    /// First trial within [`PLATEAU_TOLERANCE`] of the final best ARI.
    pub plateau_trial: Option<usize>,
    pub total_runtime_s: f64,
}

pub fn write_trial_jsonl<W: Write>(log: &TrialLog, mut out: W) -> Result<(), HarnessError> {
    for r in &log.records {
        let line = TrialLine {
            schema_version: SCHEMA_VERSION,
            dataset: log.dataset.clone(),
            trial: r.trial_index,
            config: r.config.clone(),
            ari: r.ari,
            nmi: r.nmi,
            runtime_s: r.runtime_s,
            n_clusters: r.n_clusters,
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Summary of a non-empty log.
pub fn summarize(log: &TrialLog) -> Option<TrialSummary> {
    let best = log.best()?;
    let curve = anytime_curve(log);
    Some(TrialSummary {
        schema_version: SCHEMA_VERSION,
        dataset: log.dataset.clone(),
        search_seed: log.search_seed,
        trials: log.len(),
        best_trial: best.trial_index,
        best_ari: best.ari,
        best_nmi: best.nmi,
        best_config: best.config.clone(),
        plateau_trial: plateau_trial(&curve, PLATEAU_TOLERANCE),
        anytime: curve.into_iter().map(|(_, v)| v).collect(),
        total_runtime_s: log.records.iter().map(|r| r.runtime_s).sum(),
    })
}
