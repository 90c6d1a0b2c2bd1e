/// Running neighbor-distance statistics of one growing cluster.
///
/// `mu` is the mean of every accepted neighbor distance so far. `delta` is
/// the running mean of `|distance - mu|`, where each batch is measured
/// against the mean as it stood before that batch was absorbed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterStats {
    pub mu: f64,
    pub delta: f64,
    /// Distance observations absorbed.
    pub count: usize,
}

/// Lower bound applied to `delta` before dividing by it.
pub const DELTA_FLOOR: f64 = 1e-12;

impl Default for ClusterStats {
    fn default() -> Self {
        Self::new()
    }
}

impl ClusterStats {
    /// Fresh statistics for a new cluster. The first non-empty batch
    /// overwrites both values, since it is absorbed with zero prior weight.
    pub const fn new() -> Self {
        Self {
            mu: 0.0,
            delta: 1.0,
            count: 0,
        }
    }

    /// Absorbs the distances accepted after popping the `popped`-th point of
    /// the cluster while `queued` points wait in the frontier.
    ///
    /// `popped - 1 + queued` is the number of points accepted before this
    /// batch, i.e. the weight of the current values. `delta` is updated
    /// first, against the old `mu`.
    pub fn update(&mut self, batch: &[f64], popped: usize, queued: usize) {
        assert!(popped >= 1, "update follows a pop");
        self.absorb(batch, popped - 1 + queued);
    }

    /// Same as [`update`](Self::update) with the prior weight given directly.
    pub fn absorb(&mut self, batch: &[f64], prior: usize) {
        if batch.is_empty() {
            return;
        }
        let weight = prior as f64;
        let total = (prior + batch.len()) as f64;
        let deviation: f64 = batch.iter().map(|d| (d - self.mu).abs()).sum();
        let sum: f64 = batch.iter().sum();
        self.delta = (self.delta * weight + deviation) / total;
        self.mu = (self.mu * weight + sum) / total;
        self.count = prior + batch.len();
    }

    /// `(distance - mu) / delta` with `delta` floored at [`DELTA_FLOOR`].
    pub fn standardize(&self, distance: f64) -> f64 {
        (distance - self.mu) / self.delta.max(DELTA_FLOOR)
    }
}
