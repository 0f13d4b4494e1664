//! Memory-transaction counting for one warp's lockstep access step.

use crate::graph::{CsrGraph, NodeId};
use crate::scalar::DEVICE_FLOAT_BYTES;
use crate::schedule::{partition_dims, DimAssignment, DimMode, NeighborGroup, THREADS_PER_WARP};

/// Global-memory transaction granularity in bytes.
pub const TRANSACTION_BYTES: usize = 128;

/// Number of distinct `line`-aligned segments touched by one warp-wide access.
pub fn count_transactions(addrs: &[u64], line: u64) -> usize {
    assert!(line > 0, "line size must be positive");
    let mut lines: Vec<u64> = addrs.iter().map(|a| a / line).collect();
    lines.sort_unstable();
    lines.dedup();
    lines.len()
}

fn element_addr(base: u64, row: NodeId, dim: usize, d: usize) -> u64 {
    base + ((row * dim + d) * DEVICE_FLOAT_BYTES) as u64
}

/// Addresses read at dimension step `step` when every lane of a warp works on
/// row `row` (warp-aligned mapping). Lanes with nothing left at this step are idle.
pub fn warp_aligned_access(base: u64, row: NodeId, dim: usize, dims: &DimAssignment, step: usize) -> Vec<u64> {
    dims.lanes
        .iter()
        .filter_map(|lane| lane.get(step).map(|&d| element_addr(base, row, dim, d)))
        .collect()
}

/// Addresses read by hardware warp `warp` at `(neighbor_step, dim_step)` when
/// threads are handed out consecutively over groups, `lanes_per_group` threads
/// per group, with no regard for warp boundaries.
#[allow(clippy::too_many_arguments)]
pub fn continuous_access(
    g: &CsrGraph,
    groups: &[NeighborGroup],
    base: u64,
    dim: usize,
    lanes_per_group: usize,
    warp: usize,
    neighbor_step: usize,
    dim_step: usize,
) -> Vec<u64> {
    let dims = partition_dims(dim, lanes_per_group, DimMode::Cyclic);
    let col = g.col_idx();
    (warp * THREADS_PER_WARP..(warp + 1) * THREADS_PER_WARP)
        .filter_map(|thread| {
            let group = groups.get(thread / lanes_per_group)?;
            if neighbor_step >= group.len() {
                return None;
            }
            let d = *dims.lanes[thread % lanes_per_group].get(dim_step)?;
            Some(element_addr(base, col[group.start + neighbor_step], dim, d))
        })
        .collect()
}

/// Transactions summed over every dimension step to read one full row whose
/// first byte sits `offset` bytes past a line boundary.
pub fn row_transactions(offset: u64, dims: &DimAssignment, line: u64) -> u64 {
    (0..dims.steps())
        .map(|s| {
            let addrs: Vec<u64> = dims
                .lanes
                .iter()
                .filter_map(|lane| lane.get(s).map(|&d| offset + (d * DEVICE_FLOAT_BYTES) as u64))
                .collect();
            count_transactions(&addrs, line) as u64
        })
        .sum()
}
