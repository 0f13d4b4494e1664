use rayon::prelude::*;

use super::cache::{replay_block, CacheConfig, LruCache};
use super::coalesce::{row_transactions, TRANSACTION_BYTES};
use super::{CostReport, Strategy};
use crate::error::{domain, Error, Result};
use crate::graph::{CsrGraph, NodeId};
use crate::matrix::Matrix;
use crate::memplan::{build_mem_plan, MemPlan};
use crate::scalar::{Scalar, DEVICE_FLOAT_BYTES};
use crate::schedule::{build_schedule, partition_dims, DimAssignment, DimMode, KernelParams, WarpSchedule};

/// `y[v] = Σ_{u ∈ N(v)} x[u]`, summed in ascending neighbor order.
pub fn aggregate_oracle<T: Scalar>(g: &CsrGraph, x: &Matrix<T>) -> Result<Matrix<T>> {
    if x.rows() != g.num_nodes() {
        return Err(domain(format!(
            "feature matrix has {} rows, graph has {} nodes",
            x.rows(),
            g.num_nodes()
        )));
    }
    let mut y = Matrix::zeros(x.rows(), x.cols());
    for v in 0..g.num_nodes() {
        let out = y.row_mut(v);
        for &u in g.neighbors(v) {
            for (o, &a) in out.iter_mut().zip(x.row(u)) {
                *o += a;
            }
        }
    }
    Ok(y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecOptions {
    /// Worker threads for block execution; 0 uses the global pool.
    pub workers: usize,
    /// Per-block cache model; `None` skips the cache replay.
    pub cache: Option<CacheConfig>,
    pub transaction_bytes: usize,
}

impl Default for ExecOptions {
    fn default() -> Self {
        Self { workers: 0, cache: Some(CacheConfig::default()), transaction_bytes: TRANSACTION_BYTES }
    }
}

/// What a block hands to global memory, in issue order.
enum Flush<T> {
    /// `y[target] += x[source]`, one per edge.
    Edge { target: NodeId, source: NodeId },
    Partial { target: NodeId, values: Vec<T> },
}

struct BlockOutput<T> {
    flushes: Vec<Flush<T>>,
    cost: CostReport,
}

/// Per-row transaction totals, indexed by the row's byte offset within a line.
struct RowCost {
    by_offset: Vec<u64>,
    row_bytes: usize,
    line: usize,
}

impl RowCost {
    fn new(dims: &DimAssignment, dim: usize, line: usize) -> Self {
        let row_bytes = dim * DEVICE_FLOAT_BYTES;
        let by_offset = (0..line)
            .step_by(DEVICE_FLOAT_BYTES)
            .map(|off| row_transactions(off as u64, dims, line as u64))
            .collect();
        Self { by_offset, row_bytes, line }
    }

    #[inline]
    fn of(&self, row: NodeId) -> u64 {
        self.by_offset[(row * self.row_bytes % self.line) / DEVICE_FLOAT_BYTES]
    }
}

struct Job<'a, T> {
    g: &'a CsrGraph,
    x: &'a Matrix<T>,
    sched: &'a WarpSchedule,
    plan: Option<&'a MemPlan>,
    strategy: Strategy,
    rows: RowCost,
    cache: Option<CacheConfig>,
}

impl<T: Scalar> Job<'_, T> {
    fn run_block(&self, block: std::ops::Range<usize>) -> BlockOutput<T> {
        let dim = self.x.cols() as u64;
        let col = self.g.col_idx();
        let mut cost = CostReport::default();
        let mut flushes = Vec::new();
        // shared slots of this block, used by the warp-shared strategy
        let mut slots: Vec<Vec<T>> = Vec::new();

        for w in block.clone() {
            let group = &self.sched.warps[w];
            let neighbors = &col[group.range()];
            cost.global_reads += neighbors.len() as u64 * dim;
            cost.global_transactions += neighbors.iter().map(|&u| self.rows.of(u)).sum::<u64>();

            let flush_cost = |cost: &mut CostReport, times: u64| {
                cost.atomic_ops += times * dim;
                cost.global_writes += times * dim;
                cost.global_transactions += times * self.rows.of(group.target);
            };

            match self.strategy {
                Strategy::NaiveAtomic => {
                    flush_cost(&mut cost, neighbors.len() as u64);
                    flushes.extend(neighbors.iter().map(|&u| Flush::Edge { target: group.target, source: u }));
                }
                Strategy::UnitSync => {
                    flush_cost(&mut cost, 1);
                    flushes.push(Flush::Partial { target: group.target, values: self.group_sum(neighbors) });
                }
                Strategy::WarpShared => {
                    let entry = self.plan.expect("warp-shared execution needs a plan").entries[w];
                    if entry.node_shared_slot == slots.len() {
                        slots.push(vec![T::zero(); self.x.cols()]);
                    }
                    let slot = &mut slots[entry.node_shared_slot];
                    for &u in neighbors {
                        for (s, &a) in slot.iter_mut().zip(self.x.row(u)) {
                            *s += a;
                        }
                    }
                }
            }
        }

        if self.strategy == Strategy::WarpShared {
            let plan = self.plan.expect("warp-shared execution needs a plan");
            cost.shared_bytes_per_block = plan.shared_bytes_per_block as u64;
            // leaders flush after the whole block has accumulated
            for w in block.clone() {
                let entry = plan.entries[w];
                if !entry.leader {
                    continue;
                }
                cost.atomic_ops += dim;
                cost.global_writes += dim;
                cost.global_transactions += self.rows.of(entry.node_id);
                flushes.push(Flush::Partial {
                    target: entry.node_id,
                    values: std::mem::take(&mut slots[entry.node_shared_slot]),
                });
            }
        }

        if let Some(cfg) = &self.cache {
            let mut lru = LruCache::new(cfg.lines());
            let (h, a) = replay_block(self.g, self.sched, block, cfg, self.x.cols(), &mut lru);
            cost.cache_hits += h;
            cost.cache_accesses += a;
        }
        BlockOutput { flushes, cost }
    }

    fn group_sum(&self, neighbors: &[NodeId]) -> Vec<T> {
        let mut acc = vec![T::zero(); self.x.cols()];
        for &u in neighbors {
            for (s, &a) in acc.iter_mut().zip(self.x.row(u)) {
                *s += a;
            }
        }
        acc
    }
}

/// Scheduled aggregation with default options.
pub fn aggregate_scheduled<T: Scalar>(
    g: &CsrGraph,
    x: &Matrix<T>,
    params: &KernelParams,
    strategy: Strategy,
    dim_mode: DimMode,
) -> Result<(Matrix<T>, CostReport)> {
    aggregate_scheduled_with(g, x, params, strategy, dim_mode, &ExecOptions::default())
}

/// Runs the aggregation block by block under `strategy`.
///
/// Blocks execute in parallel but their global-memory flushes are applied in
/// block order, so the result is bit-identical for every worker count.
pub fn aggregate_scheduled_with<T: Scalar>(
    g: &CsrGraph,
    x: &Matrix<T>,
    params: &KernelParams,
    strategy: Strategy,
    dim_mode: DimMode,
    opts: &ExecOptions,
) -> Result<(Matrix<T>, CostReport)> {
    params.validate()?;
    if x.rows() != g.num_nodes() || x.cols() != params.dim {
        return Err(domain(format!(
            "features are {}x{}, expected {}x{}",
            x.rows(),
            x.cols(),
            g.num_nodes(),
            params.dim
        )));
    }
    if opts.transaction_bytes == 0 || !opts.transaction_bytes.is_multiple_of(DEVICE_FLOAT_BYTES) {
        return Err(domain("transaction size must be a positive multiple of 4 bytes"));
    }
    let sched = build_schedule(g, params)?;
    let plan = match strategy {
        Strategy::WarpShared => Some(build_mem_plan(&sched, params)?),
        _ => None,
    };
    let dims = partition_dims(params.dim, params.dw, dim_mode);
    let job = Job {
        g,
        x,
        sched: &sched,
        plan: plan.as_ref(),
        strategy,
        rows: RowCost::new(&dims, params.dim, opts.transaction_bytes),
        cache: opts.cache,
    };

    let blocks: Vec<_> = sched.blocks().collect();
    let run = || blocks.par_iter().map(|b| job.run_block(b.clone())).collect::<Vec<_>>();
    let outputs = if opts.workers == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .map_err(|e| Error::Domain(format!("cannot start {} workers: {e}", opts.workers)))?
            .install(run)
    };

    let mut y = Matrix::zeros(x.rows(), x.cols());
    let mut report = CostReport {
        shared_bytes_per_block: plan.as_ref().map_or(0, |p| p.shared_bytes_per_block as u64),
        ..CostReport::default()
    };
    for out in outputs {
        report.absorb(&out.cost);
        for f in out.flushes {
            match f {
                Flush::Edge { target, source } => {
                    for (o, &a) in y.row_mut(target).iter_mut().zip(x.row(source)) {
                        *o += a;
                    }
                }
                Flush::Partial { target, values } => {
                    for (o, a) in y.row_mut(target).iter_mut().zip(values) {
                        *o += a;
                    }
                }
            }
        }
    }
    Ok((y, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{ones_features, to_csr, EdgeList};

    fn star(leaves: usize) -> CsrGraph {
        to_csr(&EdgeList::new(leaves + 1, (1..=leaves).map(|i| (0, i)).collect()).unwrap(), true)
    }

    #[test]
    fn oracle_star() {
        let g = star(5);
        let y = aggregate_oracle(&g, &ones_features::<f64>(6, 1)).unwrap();
        assert_eq!(y.get(0, 0), 5.0);
        assert_eq!(y.get(3, 0), 1.0);
    }

    #[test]
    fn oracle_empty_graph_is_zero() {
        let g = to_csr(&EdgeList::new(3, vec![]).unwrap(), false);
        let y = aggregate_oracle(&g, &ones_features::<f64>(3, 2)).unwrap();
        assert!(y.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn oracle_dimension_mismatch() {
        let g = star(2);
        assert!(aggregate_oracle(&g, &ones_features::<f64>(2, 2)).is_err());
    }

    #[test]
    fn degree_eight_node_in_one_block() {
        // directed star: only the center aggregates
        let g = to_csr(&EdgeList::new(9, (1..=8).map(|i| (0, i)).collect()).unwrap(), false);
        let dim = 16;
        let p = KernelParams::new(2, 16, 128, dim).unwrap();
        let x = ones_features::<f64>(9, dim);
        let (_, shared) = aggregate_scheduled(&g, &x, &p, Strategy::WarpShared, DimMode::Cyclic).unwrap();
        let (_, naive) = aggregate_scheduled(&g, &x, &p, Strategy::NaiveAtomic, DimMode::Cyclic).unwrap();
        let (_, unit) = aggregate_scheduled(&g, &x, &p, Strategy::UnitSync, DimMode::Cyclic).unwrap();
        assert_eq!(shared.atomic_ops, dim as u64);
        assert_eq!(naive.atomic_ops, 8 * dim as u64);
        assert_eq!(unit.atomic_ops, 4 * dim as u64);
        assert_eq!(shared.shared_bytes_per_block, 4 * 16 * 4);
    }

    #[test]
    fn results_match_oracle_for_every_strategy() {
        let el = EdgeList::new(6, vec![(0, 1), (0, 2), (0, 3), (1, 2), (3, 4), (4, 5), (5, 0)]).unwrap();
        let g = to_csr(&el, true);
        let x = Matrix::from_fn(6, 5, |r, c| (r * 5 + c) as f64 * 0.25 + 1.0);
        let want = aggregate_oracle(&g, &x).unwrap();
        for s in Strategy::ALL {
            for mode in [DimMode::Sequential, DimMode::Cyclic] {
                let p = KernelParams::new(2, 4, 64, 5).unwrap();
                let (y, _) = aggregate_scheduled(&g, &x, &p, s, mode).unwrap();
                assert!(y.max_relative_diff(&want) <= 1e-12);
            }
        }
    }

    #[test]
    fn f32_path_runs() {
        let g = star(3);
        let p = KernelParams::new(1, 8, 32, 8).unwrap();
        let (y, _) =
            aggregate_scheduled(&g, &ones_features::<f32>(4, 8), &p, Strategy::UnitSync, DimMode::Cyclic)
                .unwrap();
        assert_eq!(y.get(0, 7), 3.0f32);
    }

    #[test]
    fn rejects_feature_shape_mismatch() {
        let g = star(3);
        let p = KernelParams::new(1, 8, 32, 8).unwrap();
        let err = aggregate_scheduled(&g, &ones_features::<f64>(4, 4), &p, Strategy::UnitSync, DimMode::Cyclic);
        assert!(err.is_err());
    }
}
