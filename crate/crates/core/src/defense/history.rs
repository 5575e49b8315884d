//! The sliding query history.
//!
//! A bounded FIFO of past queries. Entries carry the packed bits for
//! distance scans plus two cached per-query summaries: the enabled-feature
//! count and the autoencoder reconstruction loss. Means and standard
//! deviations over both summaries are maintained incrementally — integer
//! sums make the count statistics exact, and the loss statistics stay well
//! within 1e-9 of a brute-force recomputation at any realistic window size.
//!
//! The history is never reset: when the capacity is reached the oldest
//! entry is evicted, one per insertion.

use crate::featurespace::{FeatureVector, PackedBits};
use crate::{Error, Result};
use std::collections::VecDeque;

#[derive(Debug, Clone)]
pub struct HistoryEntry {
    pub bits: PackedBits,
    pub enabled_count: u32,
    pub rec_loss: f64,
}

impl HistoryEntry {
    pub fn new(vector: &FeatureVector, rec_loss: f64) -> Self {
        Self {
            bits: vector.to_packed(),
            enabled_count: vector.count_enabled() as u32,
            rec_loss,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QueryHistory {
    dim: usize,
    capacity: usize,
    entries: VecDeque<HistoryEntry>,
    count_sum: u64,
    count_sq_sum: u64,
    loss_sum: f64,
    loss_sq_sum: f64,
}

impl QueryHistory {
    pub fn new(dim: usize, capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("history capacity must be positive".into()));
        }
        Ok(Self {
            dim,
            capacity,
            entries: VecDeque::with_capacity(capacity.min(1 << 16)),
            count_sum: 0,
            count_sq_sum: 0,
            loss_sum: 0.0,
            loss_sq_sum: 0.0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &HistoryEntry> {
        self.entries.iter()
    }

    /// Appends a query, evicting the oldest entry if the window is full.
    pub fn push(&mut self, entry: HistoryEntry) {
        debug_assert_eq!(entry.bits.dim(), self.dim);
        if self.entries.len() == self.capacity {
            let old = self.entries.pop_front().expect("capacity is positive");
            self.count_sum -= u64::from(old.enabled_count);
            self.count_sq_sum -= u64::from(old.enabled_count) * u64::from(old.enabled_count);
            self.loss_sum -= old.rec_loss;
            self.loss_sq_sum -= old.rec_loss * old.rec_loss;
        }
        self.count_sum += u64::from(entry.enabled_count);
        self.count_sq_sum += u64::from(entry.enabled_count) * u64::from(entry.enabled_count);
        self.loss_sum += entry.rec_loss;
        self.loss_sq_sum += entry.rec_loss * entry.rec_loss;
        self.entries.push_back(entry);
    }

    /// Mean enabled-feature count over the window.
    pub fn count_mean(&self) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        self.count_sum as f64 / self.entries.len() as f64
    }

    /// Population standard deviation of the enabled-feature counts.
    pub fn count_std(&self) -> f64 {
        self.std_from_sums(self.count_sum as f64, self.count_sq_sum as f64)
    }

    pub fn loss_mean(&self) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        self.loss_sum / self.entries.len() as f64
    }

    pub fn loss_std(&self) -> f64 {
        self.std_from_sums(self.loss_sum, self.loss_sq_sum)
    }

    fn std_from_sums(&self, sum: f64, sq_sum: f64) -> f64 {
        let n = self.entries.len() as f64;
        if self.entries.is_empty() {
            return 0.0;
        }
        let mean = sum / n;
        (sq_sum / n - mean * mean).max(0.0).sqrt()
    }

    /// One scan over the window: minimum L0 distance to the query and
    /// maximum count of co-enabled features. `None` on an empty history.
    pub fn min_dist_max_shared(&self, q: &PackedBits) -> Result<Option<(u32, u32)>> {
        if self.entries.is_empty() {
            return Ok(None);
        }
        let mut min_dist = u32::MAX;
        let mut max_shared = 0u32;
        for e in &self.entries {
            min_dist = min_dist.min(e.bits.l0(q)?);
            max_shared = max_shared.max(e.bits.shared(q)?);
        }
        Ok(Some((min_dist, max_shared)))
    }

    /// Size of the window when persisted as JSON lines of sparse vectors.
    pub fn serialized_bytes(&self) -> u64 {
        let mut total = 0u64;
        for e in &self.entries {
            let line = serde_json::json!({
                "features": e.bits.to_vector().enabled(),
                "rec_loss": e.rec_loss,
            });
            total += line.to_string().len() as u64 + 1;
        }
        total
    }
}
