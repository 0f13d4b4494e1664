//! Analytical modeling and kernel-parameter selection.
//!
//! Two routes pick parameters. [`decide`] applies the closed-form rules
//! (dimension workers from the warp width, group size from the per-thread
//! workload target). [`search_params`] runs an elitist crossover search over a
//! parameter grid scored by [`estimate_latency`].

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::graph::{degree_stats, CsrGraph};
use crate::scalar::DEVICE_FLOAT_BYTES;
use crate::schedule::{KernelParams, MAX_THREADS_PER_BLOCK, THREADS_PER_WARP};

/// Per-thread workload the group size is tuned towards.
pub const TARGET_WPT: f64 = 1024.0;
pub const DEFAULT_SMEM_PER_BLOCK: usize = 96 * 1024;
/// Scalar operations one thread may take on before it saturates.
pub const DEFAULT_THREAD_CAPABILITY: f64 = 4096.0;
pub const ALPHA_MIN: f64 = 0.15;
pub const ALPHA_MAX: f64 = 0.3;
/// Floor applied to the latency model's absolute-value factors.
pub const LATENCY_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelInputs {
    pub num_nodes: usize,
    pub num_edges: usize,
    pub dim: usize,
    pub avg_degree: f64,
    pub stddev_degree: f64,
    pub max_tpb: usize,
    pub smem_per_block: usize,
    pub alpha: f64,
    pub thread_capability: f64,
}

/// Maps `stddev ∈ [0, 2·avg]` linearly onto `[ALPHA_MIN, ALPHA_MAX]`, clamped.
pub fn alpha_for(stddev_degree: f64, avg_degree: f64) -> f64 {
    if avg_degree <= 0.0 {
        return ALPHA_MIN;
    }
    let t = (stddev_degree / (2.0 * avg_degree)).clamp(0.0, 1.0);
    ALPHA_MIN + t * (ALPHA_MAX - ALPHA_MIN)
}

impl ModelInputs {
    pub fn new(num_nodes: usize, num_edges: usize, dim: usize, avg_degree: f64, stddev_degree: f64) -> Self {
        Self {
            num_nodes,
            num_edges,
            dim,
            avg_degree,
            stddev_degree,
            max_tpb: MAX_THREADS_PER_BLOCK,
            smem_per_block: DEFAULT_SMEM_PER_BLOCK,
            alpha: alpha_for(stddev_degree, avg_degree),
            thread_capability: DEFAULT_THREAD_CAPABILITY,
        }
    }

    pub fn from_graph(g: &CsrGraph, dim: usize) -> Result<Self> {
        let s = degree_stats(g)?;
        Ok(Self::new(g.num_nodes(), g.num_edges(), dim, s.avg_degree, s.stddev_degree))
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        self.alpha = alpha;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(ALPHA_MIN..=ALPHA_MAX).contains(&self.alpha) {
            return Err(domain(format!("alpha {} outside [{ALPHA_MIN}, {ALPHA_MAX}]", self.alpha)));
        }
        if self.dim == 0 {
            return Err(domain("dim must be positive"));
        }
        Ok(())
    }
}

/// Workload per thread: `ngs · dim / dw`.
pub fn wpt(p: &KernelParams) -> f64 {
    p.ngs as f64 * p.dim as f64 / p.dw as f64
}

/// Shared memory per block in bytes: one embedding slot per warp.
pub fn smem(p: &KernelParams) -> usize {
    p.tpb / p.tpw * p.dim * DEVICE_FLOAT_BYTES
}

/// Full warp width for wide embeddings, half of it otherwise.
pub fn select_dw(dim: usize, tpw: usize) -> usize {
    if dim >= tpw {
        tpw
    } else {
        tpw / 2
    }
}

/// Upper bound on the group size: 32 average-degree rows.
pub fn ngs_degree_cap(inputs: &ModelInputs) -> usize {
    ((inputs.avg_degree.round() as usize) * 32).max(1)
}

/// Group size that brings the per-thread workload close to [`TARGET_WPT`].
pub fn select_ngs(dw: usize, inputs: &ModelInputs) -> usize {
    let raw = (TARGET_WPT * dw as f64 / inputs.dim as f64).round() as usize;
    raw.clamp(1, ngs_degree_cap(inputs))
}

/// Dimension-piece size `shared_mem / (avg_degree · 4 · 1024)`.
pub fn dp_size(smem_bytes: usize, avg_degree: f64) -> Result<f64> {
    if avg_degree <= 0.0 {
        return Err(domain("average degree must be positive"));
    }
    Ok(smem_bytes as f64 / (avg_degree * DEVICE_FLOAT_BYTES as f64 * MAX_THREADS_PER_BLOCK as f64))
}

/// Estimated latency of `p` (arbitrary units, lower is better).
pub fn estimate_latency(p: &KernelParams, inputs: &ModelInputs) -> f64 {
    let e = inputs.num_edges as f64;
    let d = inputs.dim as f64;
    let gs = p.ngs as f64;
    let dw_term = (p.dw as f64 - d / 3.0).abs().max(LATENCY_EPS);
    let tpb_term = (p.tpb as f64 - (inputs.max_tpb as f64).sqrt()).abs().max(LATENCY_EPS);
    let target = if e > 0.0 { inputs.alpha * inputs.num_nodes as f64 / e } else { 0.0 };
    e * d / (gs * dw_term * tpb_term) * (1.0 + (gs - target).abs())
}

/// Per-thread compute and shared-memory inequalities.
pub fn feasibility(p: &KernelParams, inputs: &ModelInputs) -> bool {
    let d = inputs.dim as f64;
    let gs = p.ngs as f64;
    let dw = p.dw as f64;
    let work = gs * d / dw;
    if !(work > 0.0 && work <= inputs.thread_capability) {
        return false;
    }
    if inputs.avg_degree <= 0.0 {
        return false;
    }
    let mem = p.tpb as f64 * gs / (inputs.avg_degree * dw) * d * DEVICE_FLOAT_BYTES as f64;
    mem > 0.0 && mem <= inputs.smem_per_block as f64
}

/// Hard resource limits every selected configuration must meet.
pub fn within_limits(p: &KernelParams, inputs: &ModelInputs) -> bool {
    smem(p) <= inputs.smem_per_block && p.tpb <= inputs.max_tpb && p.dw >= 1 && p.dw <= p.tpw
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamCandidate {
    pub params: KernelParams,
    pub estimated_latency: f64,
    pub feasible: bool,
}

impl ParamCandidate {
    pub fn evaluate(params: KernelParams, inputs: &ModelInputs) -> Self {
        Self {
            params,
            estimated_latency: estimate_latency(&params, inputs),
            feasible: within_limits(&params, inputs),
        }
    }
}

/// Result of the closed-form parameter selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Decision {
    pub params: KernelParams,
    pub wpt: f64,
    pub smem: usize,
    /// Whether either clamp (at least one, at most the degree cap) overrode
    /// the workload target.
    pub ngs_clamped: bool,
    pub dp_size: Option<f64>,
    pub estimated_latency: f64,
    /// Outcome of the per-thread and shared-memory inequalities.
    pub inequalities_hold: bool,
}

/// Picks `dw`, then `ngs`, then the largest `tpb ≤ 128` whose shared memory fits.
/// An explicit `tpb` is honored if it fits.
pub fn decide(inputs: &ModelInputs, tpb: Option<usize>) -> Result<Decision> {
    inputs.validate()?;
    let dw = select_dw(inputs.dim, THREADS_PER_WARP);
    let ngs = select_ngs(dw, inputs);
    let raw = (TARGET_WPT * dw as f64 / inputs.dim as f64).round() as usize;
    let candidates: Vec<usize> = match tpb {
        Some(t) => vec![t],
        None => vec![128, 64, 32],
    };
    let params = candidates
        .into_iter()
        .filter_map(|t| KernelParams::new(ngs, dw, t, inputs.dim).ok())
        .find(|p| within_limits(p, inputs))
        .ok_or_else(|| {
            Error::InvalidParams(format!(
                "no block size keeps shared memory within {} bytes for dim {}",
                inputs.smem_per_block, inputs.dim
            ))
        })?;
    Ok(Decision {
        params,
        wpt: wpt(&params),
        smem: smem(&params),
        ngs_clamped: raw != ngs,
        dp_size: dp_size(inputs.smem_per_block, inputs.avg_degree).ok(),
        estimated_latency: estimate_latency(&params, inputs),
        inequalities_hold: feasibility(&params, inputs),
    })
}

/// Values the search may assign to each field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchGrid {
    pub ngs: Vec<usize>,
    pub dw: Vec<usize>,
    pub tpb: Vec<usize>,
}

impl Default for SearchGrid {
    fn default() -> Self {
        Self {
            ngs: vec![1, 2, 4, 8, 16, 32, 64],
            dw: vec![8, 16, 32],
            tpb: vec![32, 64, 128, 256],
        }
    }
}

impl SearchGrid {
    pub fn size(&self) -> usize {
        self.ngs.len() * self.dw.len() * self.tpb.len()
    }

    /// Every valid grid point satisfying the resource limits, in grid order.
    pub fn feasible_points(&self, inputs: &ModelInputs) -> Vec<KernelParams> {
        let mut out = Vec::new();
        for &ngs in &self.ngs {
            for &dw in &self.dw {
                for &tpb in &self.tpb {
                    if let Ok(p) = KernelParams::new(ngs, dw, tpb, inputs.dim) {
                        if within_limits(&p, inputs) {
                            out.push(p);
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub iterations: usize,
    pub population: usize,
    pub mutation_rate: f64,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { iterations: 15, population: 32, mutation_rate: 0.2, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub best_latency: f64,
    pub ngs: usize,
    pub dw: usize,
    pub tpb: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchOutcome {
    pub best: ParamCandidate,
    pub trace: Vec<IterationRecord>,
}

fn rank(a: &ParamCandidate, b: &ParamCandidate) -> std::cmp::Ordering {
    a.estimated_latency
        .total_cmp(&b.estimated_latency)
        .then_with(|| (a.params.ngs, a.params.dw, a.params.tpb).cmp(&(b.params.ngs, b.params.dw, b.params.tpb)))
}

/// Elitist crossover search: keep the best half of the population, refill it
/// with field-wise crossovers of kept pairs (occasionally mutating one field),
/// repeat. Deterministic for a given seed.
pub fn search_params(inputs: &ModelInputs, grid: &SearchGrid, cfg: &SearchConfig) -> Result<SearchOutcome> {
    inputs.validate()?;
    if cfg.iterations == 0 || cfg.population < 2 {
        return Err(Error::Search("need at least one iteration and a population of two".into()));
    }
    let feasible = grid.feasible_points(inputs);
    if feasible.is_empty() {
        return Err(Error::Search(format!(
            "no feasible point in a grid of {} settings; widen the grid or relax the shared-memory limit",
            grid.size()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let score = |p: KernelParams| ParamCandidate::evaluate(p, inputs);

    let mut population: Vec<ParamCandidate> =
        (0..cfg.population).map(|_| score(*feasible.choose(&mut rng).expect("non-empty"))).collect();
    let mut trace = Vec::with_capacity(cfg.iterations);

    for iteration in 0..cfg.iterations {
        population.sort_by(rank);
        let best = population[0];
        trace.push(IterationRecord {
            iteration,
            best_latency: best.estimated_latency,
            ngs: best.params.ngs,
            dw: best.params.dw,
            tpb: best.params.tpb,
        });
        if iteration + 1 == cfg.iterations {
            break;
        }
        let keep = (cfg.population / 2).max(1);
        population.truncate(keep);
        while population.len() < cfg.population {
            let a = population[rng.gen_range(0..keep)].params;
            let b = population[rng.gen_range(0..keep)].params;
            let child = breed(a, b, grid, cfg.mutation_rate, &mut rng, inputs)
                .unwrap_or_else(|| *feasible.choose(&mut rng).expect("non-empty"));
            population.push(score(child));
        }
    }

    population.sort_by(rank);
    Ok(SearchOutcome { best: population[0], trace })
}

fn breed(
    a: KernelParams,
    b: KernelParams,
    grid: &SearchGrid,
    mutation_rate: f64,
    rng: &mut ChaCha8Rng,
    inputs: &ModelInputs,
) -> Option<KernelParams> {
    for _ in 0..8 {
        let mut c = a;
        if rng.gen_bool(0.5) {
            c.ngs = b.ngs;
        }
        if rng.gen_bool(0.5) {
            c.dw = b.dw;
        }
        if rng.gen_bool(0.5) {
            c.tpb = b.tpb;
        }
        if rng.gen_bool(mutation_rate) {
            match rng.gen_range(0..3) {
                0 => c.ngs = *grid.ngs.choose(rng)?,
                1 => c.dw = *grid.dw.choose(rng)?,
                _ => c.tpb = *grid.tpb.choose(rng)?,
            }
        }
        if c.validate().is_ok() && within_limits(&c, inputs) {
            return Some(c);
        }
    }
    None
}
