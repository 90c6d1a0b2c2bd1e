//! Paired significance testing: Wilcoxon signed-rank with Holm step-down
//! correction.
//!
//! Zero differences are dropped before ranking. Tied magnitudes share their
//! average rank. For up to [`EXACT_MAX_N`] nonzero differences the two-sided
//! p-value comes from the exact null distribution of `W+` under random signs
//! (computed over doubled ranks, so ties stay integral); above that a normal
//! approximation with tie-corrected variance is used, without continuity
//! correction. When every difference is zero no test is possible and `p = 1`.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use super::HarnessError;

/// Largest sample size evaluated with the exact distribution.
pub const EXACT_MAX_N: usize = 12;

/// Fewest pairs accepted by [`wilcoxon_holm`].
pub const MIN_PAIRS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PMethod {
    Exact,
    Normal,
    /// Every difference was zero.
    NoTest,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Wilcoxon {
    /// Nonzero differences that entered the test.
    pub n: usize,
    /// Rank sum of positive differences (`first - second > 0`).
    pub w_plus: f64,
    pub w_minus: f64,
    /// `min(w_plus, w_minus)`.
    pub statistic: f64,
    /// Two-sided.
    pub p: f64,
    pub method: PMethod,
}

/// Average ranks (1-based) of `values`, ties sharing the mean of their
/// positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Signed-rank test on the paired differences `first - second`.
pub fn wilcoxon_signed_rank(pairs: &[(f64, f64)]) -> Wilcoxon {
    let diffs: Vec<f64> = pairs.iter().map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n == 0 {
        return Wilcoxon {
            n: 0,
            w_plus: 0.0,
            w_minus: 0.0,
            statistic: 0.0,
            p: 1.0,
            method: PMethod::NoTest,
        };
    }
    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&magnitudes);
    let w_plus: f64 = ranks
        .iter()
        .zip(&diffs)
        .filter(|(_, d)| **d > 0.0)
        .map(|(r, _)| r)
        .sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;
    let (p, method) = if n <= EXACT_MAX_N {
        (exact_p(&ranks, w_plus), PMethod::Exact)
    } else {
        (normal_p(&magnitudes, &ranks, w_plus), PMethod::Normal)
    };
    Wilcoxon {
        n,
        w_plus,
        w_minus,
        statistic: w_plus.min(w_minus),
        p,
        method,
    }
}

fn exact_p(ranks: &[f64], w_plus: f64) -> f64 {
    // doubled average ranks are integers
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max: usize = doubled.iter().sum();
    let mut counts = vec![0u64; max + 1];
    counts[0] = 1;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] > 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let observed = (2.0 * w_plus).round() as usize;
    let all = (1u64 << ranks.len()) as f64;
    let low: u64 = counts[..=observed].iter().sum();
    let high: u64 = counts[observed..].iter().sum();
    (2.0 * low.min(high) as f64 / all).min(1.0)
}

fn normal_p(magnitudes: &[f64], ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut sorted = magnitudes.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    for group in sorted.chunk_by(|a, b| a == b) {
        let t = group.len() as f64;
        tie_term += t * t * t - t;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = (w_plus - mean) / var.sqrt();
    let std_normal = Normal::new(0.0, 1.0).expect("valid parameters");
    (2.0 * std_normal.sf(z.abs())).min(1.0)
}

/// Holm step-down: the `i`-th smallest p-value (0-based) is compared with
/// `alpha / (m - i)`, stopping at the first failure. Returns the rejection
/// flag per input position.
pub fn holm(p_values: &[f64], alpha: f64) -> Vec<bool> {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]).then(a.cmp(&b)));
    let mut reject = vec![false; m];
    for (i, &idx) in order.iter().enumerate() {
        if p_values[idx] <= alpha / (m - i) as f64 {
            reject[idx] = true;
        } else {
            break;
        }
    }
    reject
}

/// Test result for one named comparison after Holm correction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolmRow {
    pub name: String,
    pub test: Wilcoxon,
    pub significant: bool,
}

/// Runs [`wilcoxon_signed_rank`] for every comparison and corrects the
/// family with [`holm`] at `alpha`. Comparisons where no test is possible
/// keep `p = 1` and stay in the family.
pub fn wilcoxon_holm(comparisons: &[(String, Vec<(f64, f64)>)], alpha: f64) -> Result<Vec<HolmRow>, HarnessError> {
    for (name, pairs) in comparisons {
        if pairs.len() < MIN_PAIRS {
            return Err(HarnessError::TooFewPairs {
                name: name.clone(),
                min: MIN_PAIRS,
                got: pairs.len(),
            });
        }
    }
    let tests: Vec<Wilcoxon> = comparisons.iter().map(|(_, p)| wilcoxon_signed_rank(p)).collect();
    let p: Vec<f64> = tests.iter().map(|t| t.p).collect();
    let reject = holm(&p, alpha);
    Ok(comparisons
        .iter()
        .zip(tests)
        .zip(reject)
        .map(|(((name, _), test), significant)| HolmRow {
            name: name.clone(),
            significant: significant && test.method != PMethod::NoTest,
            test,
        })
        .collect())
}

/// Mean and sample standard deviation; `σ = 0` for fewer than two values.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
