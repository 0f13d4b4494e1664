//! Aggregation execution and the simulated-device cost model.
//!
//! [`aggregate_oracle`] is the dense reference. [`aggregate_scheduled`] runs
//! the same reduction through neighbor groups, warps and blocks under one of
//! three synchronization strategies, and reports what the device would have
//! spent doing it.

mod cache;
mod coalesce;
mod exec;
mod layers;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use cache::{simulate_cache, CacheConfig, LruCache};
pub use coalesce::{
    continuous_access, count_transactions, row_transactions, warp_aligned_access,
    TRANSACTION_BYTES,
};
pub use exec::{aggregate_oracle, aggregate_scheduled, aggregate_scheduled_with, ExecOptions};
pub use layers::{gcn_layer, gcn_layer_ordered, gin_layer, Affine, GcnOrder};

use crate::error::Error;

/// How partial results reach global memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Every edge atomically adds its neighbor's embedding.
    #[serde(rename = "naive")]
    NaiveAtomic,
    /// Each group reduces locally, then issues one atomic add per dimension.
    #[serde(rename = "unit")]
    UnitSync,
    /// Groups accumulate into shared slots; leader warps flush once per block.
    #[serde(rename = "warpshared")]
    WarpShared,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::NaiveAtomic, Strategy::UnitSync, Strategy::WarpShared];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::NaiveAtomic => "naive",
            Strategy::UnitSync => "unit",
            Strategy::WarpShared => "warpshared",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "naive" => Ok(Strategy::NaiveAtomic),
            "unit" => Ok(Strategy::UnitSync),
            "warpshared" => Ok(Strategy::WarpShared),
            other => Err(Error::Domain(format!("unknown strategy `{other}`"))),
        }
    }
}

/// Simulated kernel metrics. Reads, writes and atomics count 4-byte elements;
/// transactions count aligned memory lines.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostReport {
    pub atomic_ops: u64,
    pub global_reads: u64,
    pub global_writes: u64,
    pub global_transactions: u64,
    pub shared_bytes_per_block: u64,
    pub cache_hits: u64,
    pub cache_accesses: u64,
}

impl CostReport {
    pub fn cache_hit_rate(&self) -> f64 {
        if self.cache_accesses == 0 {
            0.0
        } else {
            self.cache_hits as f64 / self.cache_accesses as f64
        }
    }

    /// Adds every counter of `other` except the per-block shared footprint.
    pub(crate) fn absorb(&mut self, other: &CostReport) {
        self.atomic_ops += other.atomic_ops;
        self.global_reads += other.global_reads;
        self.global_writes += other.global_writes;
        self.global_transactions += other.global_transactions;
        self.cache_hits += other.cache_hits;
        self.cache_accesses += other.cache_accesses;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("atomic".parse::<Strategy>().is_err());
        assert_eq!(serde_json::to_string(&Strategy::UnitSync).unwrap(), "\"unit\"");
    }

    #[test]
    fn hit_rate_of_empty_report_is_zero() {
        assert_eq!(CostReport::default().cache_hit_rate(), 0.0);
    }
}
