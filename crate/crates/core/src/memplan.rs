//! Warp-aware shared memory customization.
//!
//! Each warp gets a shared-memory slot for its target node's partial result.
//! Inside a block, consecutive warps aggregating into the same node share a
//! slot and only the first of them (the leader) flushes it to global memory.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::scalar::DEVICE_FLOAT_BYTES;
use crate::schedule::{KernelParams, WarpSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WarpPlanEntry {
    /// Slot index within the block; byte offset is `slot * dim * 4`.
    #[serde(rename = "slot")]
    pub node_shared_slot: usize,
    #[serde(rename = "node")]
    pub node_id: NodeId,
    pub leader: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MemPlan {
    pub entries: Vec<WarpPlanEntry>,
    pub shared_bytes_per_block: usize,
}

impl MemPlan {
    /// Byte offset of `slot` in a block's shared buffer.
    pub fn slot_offset(slot: usize, dim: usize) -> usize {
        slot * dim * DEVICE_FLOAT_BYTES
    }

    /// JSON array of `{slot, node, leader}` records.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.entries)?)
    }
}

/// Checks that warps sharing a target are contiguous in the schedule.
fn check_consecutive_targets(sched: &WarpSchedule) -> Result<()> {
    let mut finished: BTreeMap<NodeId, usize> = BTreeMap::new();
    for (w, pair) in sched.warps.windows(2).enumerate() {
        if pair[0].target != pair[1].target {
            finished.insert(pair[0].target, w);
            if let Some(&last) = finished.get(&pair[1].target) {
                return Err(Error::Precondition(format!(
                    "warps of node {} are not consecutive (warp {} after warp {last})",
                    pair[1].target,
                    w + 1
                )));
            }
        }
    }
    Ok(())
}

/// Traces the customization routine warp by warp.
pub fn build_mem_plan(sched: &WarpSchedule, params: &KernelParams) -> Result<MemPlan> {
    params.validate()?;
    if sched.warps_per_block != params.warps_per_block() {
        return Err(Error::Precondition(format!(
            "schedule has {} warps per block, params imply {}",
            sched.warps_per_block,
            params.warps_per_block()
        )));
    }
    check_consecutive_targets(sched)?;

    let warp_num = sched.num_warps();
    let warp_per_block = sched.warps_per_block;
    let mut entries = Vec::with_capacity(warp_num);
    let mut local_cnt = 0usize;
    let mut last: NodeId = 0;
    let mut cnt = 0usize;
    while cnt < warp_num {
        let node_id = sched.warps[cnt].target;
        let entry = if cnt.is_multiple_of(warp_per_block) {
            // front of a block
            last = node_id;
            WarpPlanEntry { node_shared_slot: local_cnt, node_id, leader: true }
        } else if node_id == last {
            WarpPlanEntry { node_shared_slot: local_cnt, node_id, leader: false }
        } else {
            local_cnt += 1;
            last = node_id;
            WarpPlanEntry { node_shared_slot: local_cnt, node_id, leader: true }
        };
        entries.push(entry);
        cnt += 1;
        if cnt.is_multiple_of(warp_per_block) {
            local_cnt = 0;
        }
    }

    Ok(MemPlan {
        entries,
        shared_bytes_per_block: warp_per_block * params.dim * DEVICE_FLOAT_BYTES,
    })
}

/// Number of leader warps per target node.
pub fn leaders_per_node(plan: &MemPlan, sched: &WarpSchedule) -> Result<BTreeMap<NodeId, usize>> {
    if plan.entries.len() != sched.num_warps() {
        return Err(Error::Precondition("plan was not built from this schedule".into()));
    }
    let mut out = BTreeMap::new();
    for (e, g) in plan.entries.iter().zip(&sched.warps) {
        if e.node_id != g.target {
            return Err(Error::Precondition("plan was not built from this schedule".into()));
        }
        let c = out.entry(e.node_id).or_insert(0);
        if e.leader {
            *c += 1;
        }
    }
    Ok(out)
}
