//! Fully associative LRU cache replay of neighbor-embedding loads.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::graph::CsrGraph;
use crate::scalar::DEVICE_FLOAT_BYTES;
use crate::schedule::WarpSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheConfig {
    pub capacity: usize,
    pub line_size: usize,
}

impl CacheConfig {
    pub fn new(capacity: usize, line_size: usize) -> Result<Self> {
        if capacity == 0 || line_size == 0 || !capacity.is_multiple_of(line_size) {
            return Err(domain(format!(
                "cache capacity {capacity} must be a positive multiple of line size {line_size}"
            )));
        }
        Ok(Self { capacity, line_size })
    }

    pub fn lines(&self) -> usize {
        self.capacity / self.line_size
    }
}

impl Default for CacheConfig {
    /// 16 KiB of 128-byte lines.
    fn default() -> Self {
        Self { capacity: 16 * 1024, line_size: 128 }
    }
}

/// LRU set of line tags with a fixed number of entries.
#[derive(Debug, Clone)]
pub struct LruCache {
    capacity: usize,
    clock: u64,
    stamp_of: HashMap<u64, u64>,
    by_stamp: BTreeMap<u64, u64>,
}

impl LruCache {
    pub fn new(capacity_lines: usize) -> Self {
        assert!(capacity_lines > 0);
        Self { capacity: capacity_lines, clock: 0, stamp_of: HashMap::new(), by_stamp: BTreeMap::new() }
    }

    /// Touches `line`; returns whether it was resident.
    pub fn access(&mut self, line: u64) -> bool {
        self.clock += 1;
        let hit = if let Some(old) = self.stamp_of.insert(line, self.clock) {
            self.by_stamp.remove(&old);
            true
        } else {
            if self.stamp_of.len() > self.capacity {
                let (_, victim) = self.by_stamp.pop_first().expect("cache is non-empty");
                self.stamp_of.remove(&victim);
            }
            false
        };
        self.by_stamp.insert(self.clock, line);
        hit
    }

    pub fn clear(&mut self) {
        self.stamp_of.clear();
        self.by_stamp.clear();
    }

    pub fn len(&self) -> usize {
        self.stamp_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stamp_of.is_empty()
    }
}

/// Replays one block: warps advance one neighbor at a time, round-robin.
pub(crate) fn replay_block(
    g: &CsrGraph,
    sched: &WarpSchedule,
    block: std::ops::Range<usize>,
    cfg: &CacheConfig,
    dim: usize,
    cache: &mut LruCache,
) -> (u64, u64) {
    cache.clear();
    let col = g.col_idx();
    let row_bytes = dim * DEVICE_FLOAT_BYTES;
    let line = cfg.line_size;
    let warps = &sched.warps[block];
    let rounds = warps.iter().map(|w| w.len()).max().unwrap_or(0);
    let (mut hits, mut accesses) = (0, 0);
    for r in 0..rounds {
        for w in warps {
            if r >= w.len() {
                continue;
            }
            let start = col[w.start + r] * row_bytes;
            for l in start / line..=(start + row_bytes - 1) / line {
                accesses += 1;
                hits += cache.access(l as u64) as u64;
            }
        }
    }
    (hits, accesses)
}

/// Total `(hits, accesses)` with a private cache per block, emptied between blocks.
pub fn simulate_cache(g: &CsrGraph, sched: &WarpSchedule, cfg: &CacheConfig, dim: usize) -> (u64, u64) {
    let mut cache = LruCache::new(cfg.lines());
    sched
        .blocks()
        .map(|b| replay_block(g, sched, b, cfg, dim, &mut cache))
        .fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
}
