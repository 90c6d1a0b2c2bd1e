use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use evingca::{Dataset, RunReport};
use tokio::sync::Mutex;

/// A registered dataset. The data never changes after registration; the
/// mutex serializes clustering runs on it and holds the latest report.
#[derive(Debug)]
pub struct Entry {
    pub id: String,
    pub dataset: Arc<Dataset>,
    pub last_run: Mutex<Option<RunReport>>,
}

/// Datasets registered with the service, keyed by id.
#[derive(Debug, Default)]
pub struct SessionState {
    datasets: RwLock<HashMap<String, Arc<Entry>>>,
    next_id: AtomicU64,
}

impl SessionState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores `dataset` under a fresh id.
    pub fn register(&self, dataset: Dataset) -> Arc<Entry> {
        let id = format!("ds-{}", self.next_id.fetch_add(1, Ordering::Relaxed) + 1);
        let entry = Arc::new(Entry {
            id: id.clone(),
            dataset: Arc::new(dataset),
            last_run: Mutex::new(None),
        });
        self.datasets.write().expect("lock poisoned").insert(id, entry.clone());
        entry
    }

    pub fn get(&self, id: &str) -> Option<Arc<Entry>> {
        self.datasets.read().expect("lock poisoned").get(id).cloned()
    }

    /// All entries ordered by registration.
    pub fn entries(&self) -> Vec<Arc<Entry>> {
        let mut all: Vec<Arc<Entry>> = self.datasets.read().expect("lock poisoned").values().cloned().collect();
        all.sort_by_key(|e| e.id[3..].parse::<u64>().unwrap_or(u64::MAX));
        all
    }
}
