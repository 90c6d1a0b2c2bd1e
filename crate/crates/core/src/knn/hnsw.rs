//! Hierarchical navigable small-world graph.
//!
//! Points are inserted in id order on a single thread and node levels come
//! from a seeded ChaCha8 stream, so the graph is a pure function of
//! `(dataset, params, seed)`. Searches are read-only and may run
//! concurrently.

use std::cell::RefCell;
use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sq_dist;
use crate::data::Dataset;

/// HNSW build and search options.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HnswParams {
    /// Links per node on upper layers; layer 0 allows twice as many.
    pub max_links: usize,
    /// Candidate list size while inserting.
    pub ef_construction: usize,
    /// Candidate list size while querying (raised to `k + 1` when smaller).
    pub ef_search: usize,
}

impl Default for HnswParams {
    fn default() -> Self {
        Self {
            max_links: 16,
            ef_construction: 200,
            ef_search: 96,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cand {
    d: f64,
    id: u32,
}

impl Eq for Cand {}

impl Ord for Cand {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d.total_cmp(&other.d).then(self.id.cmp(&other.id))
    }
}

impl PartialOrd for Cand {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Epoch-stamped visited marks; clearing is O(1).
#[derive(Default)]
struct Visited {
    marks: Vec<u32>,
    epoch: u32,
}

impl Visited {
    fn reset(&mut self, n: usize) {
        if self.marks.len() < n {
            self.marks.resize(n, 0);
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.marks.iter_mut().for_each(|m| *m = 0);
            self.epoch = 1;
        }
    }

    /// Returns true when `id` was not yet marked.
    fn insert(&mut self, id: u32) -> bool {
        let slot = &mut self.marks[id as usize];
        if *slot == self.epoch {
            false
        } else {
            *slot = self.epoch;
            true
        }
    }
}

thread_local! {
    static VISITED: RefCell<Visited> = RefCell::new(Visited::default());
}

pub(super) struct Hnsw {
    params: HnswParams,
    /// `links[node][layer]`
    links: Vec<Vec<Vec<u32>>>,
    entry: u32,
    top: usize,
}

impl Hnsw {
    pub(super) fn build(data: &Dataset, params: HnswParams, seed: u64) -> Self {
        let m = params.max_links.max(2);
        let level_mult = 1.0 / (m as f64).ln();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut graph = Hnsw {
            params: HnswParams { max_links: m, ..params },
            links: Vec::with_capacity(data.len()),
            entry: 0,
            top: 0,
        };
        let mut visited = Visited::default();
        for id in 0..data.len() {
            let u: f64 = 1.0 - rng.random::<f64>();
            let level = (-u.ln() * level_mult).floor() as usize;
            graph.insert(data, id as u32, level, &mut visited);
        }
        graph
    }

    fn insert(&mut self, data: &Dataset, q: u32, level: usize, visited: &mut Visited) {
        self.links.push(vec![Vec::new(); level + 1]);
        if q == 0 {
            self.entry = 0;
            self.top = level;
            return;
        }
        let point = data.row(q as usize);
        let mut eps = vec![Cand {
            d: sq_dist(point, data.row(self.entry as usize)),
            id: self.entry,
        }];
        for layer in (level + 1..=self.top).rev() {
            eps = self.search_layer(data, point, &eps, 1, layer, visited);
        }
        let m = self.params.max_links;
        for layer in (0..=level.min(self.top)).rev() {
            let found = self.search_layer(data, point, &eps, self.params.ef_construction, layer, visited);
            let chosen = select_neighbors(data, &found, m);
            self.links[q as usize][layer] = chosen.iter().map(|c| c.id).collect();
            let cap = if layer == 0 { 2 * m } else { m };
            for c in &chosen {
                let e = c.id as usize;
                self.links[e][layer].push(q);
                if self.links[e][layer].len() > cap {
                    let base = data.row(e);
                    let mut cands: Vec<Cand> = self.links[e][layer]
                        .iter()
                        .map(|&id| Cand {
                            d: sq_dist(base, data.row(id as usize)),
                            id,
                        })
                        .collect();
                    cands.sort_unstable();
                    self.links[e][layer] = select_neighbors(data, &cands, cap).iter().map(|c| c.id).collect();
                }
            }
            eps = found;
        }
        if level > self.top {
            self.top = level;
            self.entry = q;
        }
    }

    /// Beam search on one layer; returns up to `ef` candidates, nearest first.
    fn search_layer(
        &self,
        data: &Dataset,
        point: &[f64],
        entries: &[Cand],
        ef: usize,
        layer: usize,
        visited: &mut Visited,
    ) -> Vec<Cand> {
        visited.reset(data.len());
        let mut frontier: BinaryHeap<Reverse<Cand>> = BinaryHeap::new();
        let mut best: BinaryHeap<Cand> = BinaryHeap::new();
        for &e in entries {
            if visited.insert(e.id) {
                frontier.push(Reverse(e));
                best.push(e);
                if best.len() > ef {
                    best.pop();
                }
            }
        }
        while let Some(Reverse(c)) = frontier.pop() {
            if best.len() >= ef && best.peek().is_some_and(|w| c > *w) {
                break;
            }
            for &nb in &self.links[c.id as usize][layer] {
                if !visited.insert(nb) {
                    continue;
                }
                let cand = Cand {
                    d: sq_dist(point, data.row(nb as usize)),
                    id: nb,
                };
                if best.len() < ef || best.peek().is_some_and(|w| cand < *w) {
                    frontier.push(Reverse(cand));
                    best.push(cand);
                    if best.len() > ef {
                        best.pop();
                    }
                }
            }
        }
        best.into_sorted_vec()
    }

    /// Approximate `k` nearest neighbors of an indexed point as
    /// `(squared distance, id)`, nearest first, excluding the point itself.
    pub(super) fn search(&self, data: &Dataset, query: usize, k: usize) -> Vec<(f64, usize)> {
        let point = data.row(query);
        let ef = self.params.ef_search.max(k + 1);
        VISITED.with(|v| {
            let visited = &mut v.borrow_mut();
            let mut eps = vec![Cand {
                d: sq_dist(point, data.row(self.entry as usize)),
                id: self.entry,
            }];
            for layer in (1..=self.top).rev() {
                eps = self.search_layer(data, point, &eps, 1, layer, visited);
            }
            self.search_layer(data, point, &eps, ef, 0, visited)
                .into_iter()
                .filter(|c| c.id as usize != query)
                .take(k)
                .map(|c| (c.d, c.id as usize))
                .collect()
        })
    }
}

/// Diversity heuristic: keep a candidate only if it is closer to the base
/// point than to every neighbor already kept, then top up with the nearest
/// discarded candidates. `sorted` must be nearest first.
fn select_neighbors(data: &Dataset, sorted: &[Cand], m: usize) -> Vec<Cand> {
    if sorted.len() <= m {
        return sorted.to_vec();
    }
    let mut kept: Vec<Cand> = Vec::with_capacity(m);
    let mut pruned = Vec::new();
    for &c in sorted {
        if kept.len() == m {
            break;
        }
        let row = data.row(c.id as usize);
        if kept.iter().all(|r| c.d < sq_dist(row, data.row(r.id as usize))) {
            kept.push(c);
        } else {
            pruned.push(c);
        }
    }
    for c in pruned {
        if kept.len() == m {
            break;
        }
        kept.push(c);
    }
    kept.sort_unstable();
    kept
}
