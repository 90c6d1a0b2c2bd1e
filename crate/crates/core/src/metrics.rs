//! External agreement metrics between two labelings.
//!
//! Every label value, including [`crate::NOISE`], is treated as an ordinary
//! class. NMI normalizes mutual information by the arithmetic mean of the two
//! entropies and returns 0 when that mean is 0.

use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("label length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least 2 labeled points, got {0}")]
    TooFewPoints(usize),
}

/// Cross-tabulation of two labelings.
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyTable {
    /// `counts[r][c]`: points with the `r`-th left class and `c`-th right class.
    pub counts: Vec<Vec<u64>>,
    pub row_sums: Vec<u64>,
    pub col_sums: Vec<u64>,
    pub total: u64,
}

impl ContingencyTable {
    pub fn new(left: &[i64], right: &[i64]) -> Result<Self, MetricError> {
        if left.len() != right.len() {
            return Err(MetricError::LengthMismatch {
                left: left.len(),
                right: right.len(),
            });
        }
        let rows = dense_ids(left);
        let cols = dense_ids(right);
        let n_rows = rows.iter().max().map_or(0, |m| m + 1);
        let n_cols = cols.iter().max().map_or(0, |m| m + 1);
        let mut counts = vec![vec![0u64; n_cols]; n_rows];
        for (&r, &c) in rows.iter().zip(&cols) {
            counts[r][c] += 1;
        }
        let row_sums = counts.iter().map(|r| r.iter().sum()).collect();
        let col_sums = (0..n_cols).map(|c| counts.iter().map(|r| r[c]).sum()).collect();
        Ok(Self {
            counts,
            row_sums,
            col_sums,
            total: left.len() as u64,
        })
    }
}

fn dense_ids(labels: &[i64]) -> Vec<usize> {
    let mut ids: HashMap<i64, usize> = HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = ids.len();
            *ids.entry(l).or_insert(next)
        })
        .collect()
}

fn pairs(n: u64) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

/// Adjusted Rand index in `[-1, 1]`.
///
/// When both labelings are trivial in the same way (the expected and the
/// maximum index coincide) the partitions agree and 1 is returned.
pub fn ari(a: &[i64], b: &[i64]) -> Result<f64, MetricError> {
    let t = ContingencyTable::new(a, b)?;
    if t.total < 2 {
        return Err(MetricError::TooFewPoints(t.total as usize));
    }
    let index: f64 = t.counts.iter().flatten().map(|&c| pairs(c)).sum();
    let sum_rows: f64 = t.row_sums.iter().map(|&c| pairs(c)).sum();
    let sum_cols: f64 = t.col_sums.iter().map(|&c| pairs(c)).sum();
    let expected = sum_rows * sum_cols / pairs(t.total);
    let max_index = 0.5 * (sum_rows + sum_cols);
    let denom = max_index - expected;
    if denom == 0.0 {
        return Ok(1.0);
    }
    Ok((index - expected) / denom)
}

/// Normalized mutual information in `[0, 1]` (arithmetic-mean
/// normalization).
pub fn nmi(a: &[i64], b: &[i64]) -> Result<f64, MetricError> {
    let t = ContingencyTable::new(a, b)?;
    if t.total < 2 {
        return Err(MetricError::TooFewPoints(t.total as usize));
    }
    let n = t.total as f64;
    let entropy = |sums: &[u64]| -> f64 {
        sums.iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    let h_a = entropy(&t.row_sums);
    let h_b = entropy(&t.col_sums);
    let norm = 0.5 * (h_a + h_b);
    if norm <= 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for (r, row) in t.counts.iter().enumerate() {
        for (c, &nij) in row.iter().enumerate() {
            if nij == 0 {
                continue;
            }
            let nij = nij as f64;
            mi += nij / n * (n * nij / (t.row_sums[r] as f64 * t.col_sums[c] as f64)).ln();
        }
    }
    Ok((mi.max(0.0) / norm).min(1.0))
}
