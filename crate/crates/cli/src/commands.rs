use std::fs::File;
use std::io::BufReader;

use gnnsched_core::decider::{decide, search_params, ModelInputs, SearchConfig, SearchGrid};
use gnnsched_core::engine::{aggregate_oracle, aggregate_scheduled_with, CacheConfig, ExecOptions, Strategy};
use gnnsched_core::generate::{random_features, PlantedPartition};
use gnnsched_core::graph::{aes, degree_stats, load_edge_list, to_csr};
use gnnsched_core::memplan::build_mem_plan;
use gnnsched_core::renumber::{apply_mapping, reorder_rule, renumber, NodeMapping};
use gnnsched_core::schedule::build_schedule;
use gnnsched_core::{CsrGraph, DimMode, EdgeList, FeatureMatrix, KernelParams};
use serde::Serialize;

use crate::output::{self, CostRow};
use crate::{Command, ExecArgs, Failure, GenerateArgs, GraphArgs, KernelArgs, RunArgs, Stage, EXIT_INPUT, EXIT_INVARIANT};

/// Relative tolerance for the scheduled result against the reference aggregation.
const ORACLE_TOLERANCE: f64 = 1e-12;

pub fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Stats { graph, json } => cmd_stats(&graph, json),
        Command::Generate(args) => cmd_generate(&args),
        Command::Reorder { graph, out, mapping } => cmd_reorder(&graph, out.as_deref(), mapping.as_deref()),
        Command::Schedule { graph, kernel, out } => {
            let (g, params) = graph_and_params(&graph, &kernel)?;
            let sched = build_schedule(&g, &params).stage("schedule")?;
            output::write_text(out.as_deref(), &sched.to_json().stage("schedule")?)
        }
        Command::Plan { graph, kernel, out } => {
            let (g, params) = graph_and_params(&graph, &kernel)?;
            let sched = build_schedule(&g, &params).stage("schedule")?;
            let plan = build_mem_plan(&sched, &params).stage("plan")?;
            output::write_text(out.as_deref(), &plan.to_json().stage("plan")?)
        }
        Command::Run(args) => cmd_run(&args),
        Command::Simulate { graph, kernel, exec, out, json } => cmd_simulate(&graph, &kernel, &exec, out.as_deref(), json),
        Command::Decide { graph, dim, tpb, json } => cmd_decide(&graph, dim, tpb, json),
        Command::Search { graph, dim, seed, iterations, population, json } => {
            let (_, g) = load(&graph)?;
            let inputs = ModelInputs::from_graph(&g, dim).stage("stats")?;
            let cfg = SearchConfig { iterations, population, seed, ..SearchConfig::default() };
            let out = search_params(&inputs, &SearchGrid::default(), &cfg).stage("search")?;
            if json {
                return output::write_json(None, &out);
            }
            let mut text = String::from("iteration,best_latency,ngs,dw,tpb\n");
            for r in &out.trace {
                text += &format!("{},{},{},{},{}\n", r.iteration, r.best_latency, r.ngs, r.dw, r.tpb);
            }
            output::write_text(None, &text)
        }
    }
}

fn load(args: &GraphArgs) -> Result<(EdgeList, CsrGraph), Failure> {
    let file = File::open(&args.input)
        .map_err(|e| Failure::new(EXIT_INPUT, "load", format!("{}: {e}", args.input)))?;
    let el = load_edge_list(BufReader::new(file))
        .map_err(|e| Failure::new(EXIT_INPUT, "load", format!("{}: {e}", args.input)))?;
    let g = to_csr(&el, !args.directed);
    Ok((el, g))
}

/// Explicit flags win; anything missing comes from the decider.
fn resolve_params(g: &CsrGraph, k: &KernelArgs) -> Result<KernelParams, Failure> {
    if let (Some(ngs), Some(dw), Some(tpb)) = (k.ngs, k.dw, k.tpb) {
        return KernelParams::new(ngs, dw, tpb, k.dim).stage("decide");
    }
    let inputs = ModelInputs::from_graph(g, k.dim).stage("decide")?;
    let d = decide(&inputs, k.tpb).stage("decide")?;
    KernelParams::new(k.ngs.unwrap_or(d.params.ngs), k.dw.unwrap_or(d.params.dw), d.params.tpb, k.dim)
        .stage("decide")
}

fn graph_and_params(graph: &GraphArgs, kernel: &KernelArgs) -> Result<(CsrGraph, KernelParams), Failure> {
    let (_, g) = load(graph)?;
    let params = resolve_params(&g, kernel)?;
    Ok((g, params))
}

fn exec_options(exec: &ExecArgs) -> Result<ExecOptions, Failure> {
    let cache = match exec.cache_kb {
        0 => None,
        kb => Some(CacheConfig::new(kb * 1024, CacheConfig::default().line_size).stage("config")?),
    };
    Ok(ExecOptions { workers: exec.workers, cache, ..ExecOptions::default() })
}

#[derive(Serialize)]
struct StatsReport {
    nodes: usize,
    edges: usize,
    csr_entries: usize,
    avg_degree: f64,
    max_degree: usize,
    stddev_degree: f64,
    aes: f64,
    sqrt_aes: f64,
    threshold: f64,
    reorder: bool,
}

fn cmd_stats(graph: &GraphArgs, json: bool) -> Result<(), Failure> {
    let (el, g) = load(graph)?;
    let span = aes(&el).stage("stats")?;
    let s = degree_stats(&g).stage("stats")?;
    let r = StatsReport {
        nodes: g.num_nodes(),
        edges: el.num_edges(),
        csr_entries: g.num_edges(),
        avg_degree: s.avg_degree,
        max_degree: s.max_degree,
        stddev_degree: s.stddev_degree,
        aes: span,
        sqrt_aes: span.sqrt(),
        threshold: ((g.num_nodes() as f64).sqrt() / 100.0).floor(),
        reorder: reorder_rule(span, g.num_nodes()),
    };
    if json {
        return output::write_json(None, &r);
    }
    let text = format!(
        "nodes {}\nedges {}\ncsr_entries {}\navg_degree {:.4}\nmax_degree {}\nstddev_degree {:.4}\n\
         aes {:.4}\nsqrt_aes {:.4}\nthreshold {}\nreorder {}\n",
        r.nodes,
        r.edges,
        r.csr_entries,
        r.avg_degree,
        r.max_degree,
        r.stddev_degree,
        r.aes,
        r.sqrt_aes,
        r.threshold,
        r.reorder
    );
    output::write_text(None, &text)
}

fn cmd_generate(a: &GenerateArgs) -> Result<(), Failure> {
    let el = PlantedPartition {
        communities: a.communities,
        size: a.size,
        p_in: a.p_in,
        p_out: a.p_out,
        shuffle: a.shuffle,
        seed: a.seed,
    }
    .generate()
    .stage("generate")?;
    let mut w = output::sink(a.out.as_deref())?;
    el.write_to(&mut w).stage("generate")
}

fn cmd_reorder(graph: &GraphArgs, out: Option<&str>, mapping: Option<&str>) -> Result<(), Failure> {
    let (el, g) = load(graph)?;
    let (ca, m) = renumber(&g);
    let relabeled = el.relabel(m.old_to_new()).stage("reorder")?;
    if let (Ok(before), Ok(after)) = (aes(&el), aes(&relabeled)) {
        eprintln!("communities {}, aes {before:.4} -> {after:.4}", ca.num_communities());
    }
    if let Some(p) = mapping {
        output::write_text(Some(p), &m.to_json().stage("reorder")?)?;
    }
    let mut w = output::sink(out)?;
    relabeled.write_to(&mut w).stage("reorder")
}

fn cmd_decide(graph: &GraphArgs, dim: usize, tpb: Option<usize>, json: bool) -> Result<(), Failure> {
    let (_, g) = load(graph)?;
    let inputs = ModelInputs::from_graph(&g, dim).stage("stats")?;
    let d = decide(&inputs, tpb).stage("decide")?;
    if json {
        return output::write_json(None, &d);
    }
    let p = d.params;
    let text = format!(
        "ngs {}\ndw {}\ntpb {}\nwpt {}\nsmem {}\nngs_clamped {}\ninequalities_hold {}\nestimated_latency {}\n",
        p.ngs, p.dw, p.tpb, d.wpt, d.smem, d.ngs_clamped, d.inequalities_hold, d.estimated_latency
    );
    output::write_text(None, &text)
}

fn cmd_simulate(
    graph: &GraphArgs,
    kernel: &KernelArgs,
    exec: &ExecArgs,
    out: Option<&str>,
    json: bool,
) -> Result<(), Failure> {
    let (g, params) = graph_and_params(graph, kernel)?;
    let opts = exec_options(exec)?;
    let x = gnnsched_core::graph::ones_features::<f64>(g.num_nodes(), params.dim);
    let mut rows = Vec::new();
    for s in Strategy::ALL {
        let (_, cost) = aggregate_scheduled_with(&g, &x, &params, s, DimMode::from(exec.dim_mode), &opts).stage("run")?;
        rows.push(CostRow::new(Some(s.name().to_string()), &cost));
    }
    output::write_costs(out, &rows, json)
}

fn cmd_run(a: &RunArgs) -> Result<(), Failure> {
    let (el, g) = load(&a.graph)?;
    if g.num_nodes() == 0 {
        return Err(Failure::new(EXIT_INPUT, "stats", "graph has no nodes"));
    }
    let reorder = if a.reorder {
        true
    } else if a.no_reorder {
        false
    } else {
        aes(&el).map(|s| reorder_rule(s, g.num_nodes())).unwrap_or(false)
    };
    let mapping = if reorder { renumber(&g).1 } else { NodeMapping::identity(g.num_nodes()) };
    let h = if reorder { apply_mapping(&g, &mapping).stage("reorder")? } else { g.clone() };

    let params = resolve_params(&h, &a.kernel)?;
    let opts = exec_options(&a.exec)?;
    let x: FeatureMatrix = random_features(g.num_nodes(), params.dim, a.seed);
    let x_new = x.scatter_rows(mapping.old_to_new()).stage("reorder")?;
    let (y_new, cost) = aggregate_scheduled_with(&h, &x_new, &params, a.strategy.into(), a.exec.dim_mode.into(), &opts)
        .stage("run")?;
    let y = y_new.scatter_rows(mapping.new_to_old()).stage("run")?;

    let want = aggregate_oracle(&g, &x).stage("oracle")?;
    let diff = y.max_relative_diff(&want);
    if diff > ORACLE_TOLERANCE {
        return Err(Failure::new(
            EXIT_INVARIANT,
            "oracle",
            format!("scheduled result deviates from reference by {diff:e} (tolerance {ORACLE_TOLERANCE:e})"),
        ));
    }
    eprintln!(
        "reordered {reorder}, ngs {} dw {} tpb {}, max relative error {diff:e}",
        params.ngs, params.dw, params.tpb
    );
    if let Some(p) = &a.features_out {
        output::write_features(p, &y)?;
    }
    output::write_costs(a.out.as_deref(), &[CostRow::new(None, &cost)], a.json)
}
