//! 2D workload construction: neighbor groups along the CSR rows, dimension
//! lanes along the embedding, and a warp-aligned mapping of groups to blocks.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CsrGraph, NodeId};

/// Threads per warp on the simulated device.
pub const THREADS_PER_WARP: usize = 32;
/// Hardware ceiling on threads per block.
pub const MAX_THREADS_PER_BLOCK: usize = 1024;

/// Tunable kernel configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KernelParams {
    /// Neighbor-group size.
    pub ngs: usize,
    /// Dimension workers per warp.
    pub dw: usize,
    /// Threads per block.
    pub tpb: usize,
    /// Threads per warp.
    pub tpw: usize,
    pub dim: usize,
}

impl KernelParams {
    pub fn new(ngs: usize, dw: usize, tpb: usize, dim: usize) -> Result<Self> {
        let p = Self { ngs, dw, tpb, tpw: THREADS_PER_WARP, dim };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.tpw != THREADS_PER_WARP {
            return bad(format!("tpw must be {THREADS_PER_WARP}, got {}", self.tpw));
        }
        if self.ngs == 0 {
            return bad("ngs must be at least 1".into());
        }
        if self.dw == 0 || self.dw > self.tpw {
            return bad(format!("dw must lie in [1, {}], got {}", self.tpw, self.dw));
        }
        if self.tpb == 0 || !self.tpb.is_multiple_of(self.tpw) {
            return bad(format!("tpb {} is not a positive multiple of tpw {}", self.tpb, self.tpw));
        }
        if self.tpb > MAX_THREADS_PER_BLOCK {
            return bad(format!("tpb {} exceeds {MAX_THREADS_PER_BLOCK}", self.tpb));
        }
        if self.dim == 0 {
            return bad("dim must be at least 1".into());
        }
        Ok(())
    }

    pub fn warps_per_block(&self) -> usize {
        self.tpb / self.tpw
    }
}

/// A slice of at most `ngs` neighbors of one target node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborGroup {
    pub id: usize,
    pub target: NodeId,
    /// Half-open CSR offset range `[start, end)`.
    pub start: usize,
    pub end: usize,
}

impl NeighborGroup {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }
}

/// Splits every CSR row into consecutive groups of `ngs` neighbors; only the
/// last group of a row may be short. Groups are numbered node-major.
pub fn partition_neighbors(g: &CsrGraph, ngs: usize) -> Vec<NeighborGroup> {
    assert!(ngs >= 1, "ngs must be at least 1");
    let rp = g.row_ptr();
    let mut groups = Vec::with_capacity(g.num_edges().div_ceil(ngs) + g.num_nodes());
    for v in 0..g.num_nodes() {
        let mut start = rp[v];
        while start < rp[v + 1] {
            let end = (start + ngs).min(rp[v + 1]);
            groups.push(NeighborGroup { id: groups.len(), target: v, start, end });
            start = end;
        }
    }
    groups
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DimMode {
    /// Lane `t` owns the `t`-th contiguous chunk.
    Sequential,
    /// Lane `t` owns `t, t + dw, t + 2dw, ...`.
    Cyclic,
}

/// The dimension indices owned by each of `dw` lanes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimAssignment {
    pub mode: DimMode,
    pub lanes: Vec<Vec<usize>>,
}

impl DimAssignment {
    /// Number of lockstep iterations the lanes need to cover every dimension.
    pub fn steps(&self) -> usize {
        self.lanes.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn dw(&self) -> usize {
        self.lanes.len()
    }
}

pub fn partition_dims(dim: usize, dw: usize, mode: DimMode) -> DimAssignment {
    assert!(dw >= 1, "dw must be at least 1");
    let lanes = match mode {
        DimMode::Sequential => {
            let chunk = dim.div_ceil(dw);
            (0..dw).map(|t| (t * chunk).min(dim)..((t + 1) * chunk).min(dim)).map(Iterator::collect).collect()
        }
        DimMode::Cyclic => (0..dw).map(|t| (t..dim).step_by(dw).collect()).collect(),
    };
    DimAssignment { mode, lanes }
}

/// Warp `i` owns group `i`; consecutive runs of `warps_per_block` warps form a block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WarpSchedule {
    pub warps: Vec<NeighborGroup>,
    pub warps_per_block: usize,
}

impl WarpSchedule {
    pub fn num_warps(&self) -> usize {
        self.warps.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.warps.len().div_ceil(self.warps_per_block)
    }

    /// Warp index range of block `b`; the last block may be short.
    pub fn block(&self, b: usize) -> Range<usize> {
        let start = b * self.warps_per_block;
        start..(start + self.warps_per_block).min(self.warps.len())
    }

    pub fn blocks(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        (0..self.num_blocks()).map(|b| self.block(b))
    }

    pub fn block_of(&self, warp: usize) -> usize {
        warp / self.warps_per_block
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Export<'a> {
            warps_per_block: usize,
            groups: Vec<(usize, NodeId, (usize, usize))>,
            blocks: Vec<&'a [NeighborGroup]>,
        }
        let export = Export {
            warps_per_block: self.warps_per_block,
            groups: self.warps.iter().map(|g| (g.id, g.target, (g.start, g.end))).collect(),
            blocks: self.blocks().map(|r| &self.warps[r]).collect(),
        };
        Ok(serde_json::to_string(&export)?)
    }
}

pub fn map_warps(groups: Vec<NeighborGroup>, params: &KernelParams) -> Result<WarpSchedule> {
    params.validate()?;
    Ok(WarpSchedule { warps: groups, warps_per_block: params.warps_per_block() })
}

/// Neighbor groups plus their warp mapping for `g`.
pub fn build_schedule(g: &CsrGraph, params: &KernelParams) -> Result<WarpSchedule> {
    params.validate()?;
    map_warps(partition_neighbors(g, params.ngs), params)
}
