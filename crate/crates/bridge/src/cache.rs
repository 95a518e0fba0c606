//! Single-flight cache: concurrent misses on one key share a single
//! computation. Failed computations are not stored.

use std::collections::BTreeMap;
use std::future::Future;
use std::sync::{Arc, Mutex};

use tokio::sync::OnceCell;

pub struct SingleFlightCache<K, V> {
    cells: Mutex<BTreeMap<K, Arc<OnceCell<V>>>>,
}

impl<K: Ord + Clone, V: Clone> Default for SingleFlightCache<K, V> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K: Ord + Clone, V: Clone> SingleFlightCache<K, V> {
    pub fn new() -> Self {
        Self { cells: Mutex::new(BTreeMap::new()) }
    }

    fn cell(&self, key: &K) -> Arc<OnceCell<V>> {
        let mut cells = self.cells.lock().unwrap_or_else(|e| e.into_inner());
        cells.entry(key.clone()).or_default().clone()
    }

    pub fn get(&self, key: &K) -> Option<V> {
        let cells = self.cells.lock().unwrap_or_else(|e| e.into_inner());
        cells.get(key).and_then(|c| c.get().cloned())
    }

    /// Returns the cached value, or runs `compute` once for every caller
    /// waiting on `key`. The flag is true for the caller whose computation
    /// produced the value. On error the cell stays empty and the next
    /// waiter computes again.
    pub async fn get_or_try_compute<E, F, Fut>(&self, key: &K, compute: F) -> Result<(V, bool), E>
    where
        F: FnOnce() -> Fut,
        Fut: Future<Output = Result<V, E>>,
    {
        let cell = self.cell(key);
        let mut computed_here = false;
        let value = cell
            .get_or_try_init(|| {
                computed_here = true;
                compute()
            })
            .await?;
        Ok((value.clone(), computed_here))
    }

    pub fn len(&self) -> usize {
        let cells = self.cells.lock().unwrap_or_else(|e| e.into_inner());
        cells.values().filter(|c| c.initialized()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        self.cells.lock().unwrap_or_else(|e| e.into_inner()).clear();
    }
}
