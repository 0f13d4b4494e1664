//! `gnnsched`: drive the scheduling pipeline from edge-list files.

mod commands;
mod output;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gnnsched_core::engine::Strategy;
use gnnsched_core::{DimMode, Error};

#[derive(Parser, Debug)]
#[command(name = "gnnsched", version, about = "Schedule, plan and cost GNN neighbor aggregation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Degree statistics, averaged edge span and the reorder recommendation.
    Stats {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        json: bool,
    },
    /// Write a planted-partition edge list.
    Generate(GenerateArgs),
    /// Renumber nodes so communities occupy contiguous id ranges.
    Reorder {
        #[command(flatten)]
        graph: GraphArgs,
        /// Reordered edge list; stdout when absent.
        #[arg(long)]
        out: Option<String>,
        /// Also write the old→new mapping as JSON.
        #[arg(long)]
        mapping: Option<String>,
    },
    /// Export neighbor groups and their warp/block layout as JSON.
    Schedule {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        out: Option<String>,
    },
    /// Export the shared-memory slot and leader plan as JSON.
    Plan {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        out: Option<String>,
    },
    /// Full pipeline: stats, optional reorder, decide, schedule, plan, run, oracle check.
    Run(RunArgs),
    /// Cost every strategy on the same schedule without checking results.
    Simulate {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        #[command(flatten)]
        exec: ExecArgs,
        #[arg(long)]
        out: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Closed-form parameter selection.
    Decide {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value_t = 16)]
        dim: usize,
        #[arg(long)]
        tpb: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Crossover search over the default parameter grid.
    Search {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value_t = 16)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 15)]
        iterations: usize,
        #[arg(long, default_value_t = 32)]
        population: usize,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Debug)]
struct GraphArgs {
    /// Edge list: one `src dst` pair per line, `#`/`%` comments, optional `nodes N` header.
    #[arg(long)]
    input: String,
    /// Keep edges one-way instead of adding the reverse of each.
    #[arg(long)]
    directed: bool,
}

#[derive(Args, Debug)]
struct KernelArgs {
    #[arg(long, default_value_t = 16)]
    dim: usize,
    /// Any of ngs/dw/tpb left out is filled in by the decider.
    #[arg(long)]
    ngs: Option<usize>,
    #[arg(long)]
    dw: Option<usize>,
    #[arg(long)]
    tpb: Option<usize>,
}

#[derive(Args, Debug)]
struct ExecArgs {
    #[arg(long, value_enum, default_value_t = DimModeArg::Cyclic)]
    dim_mode: DimModeArg,
    /// Per-block cache capacity in KiB; 0 disables the cache model.
    #[arg(long, default_value_t = 16)]
    cache_kb: usize,
    /// Worker threads for block execution; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long)]
    communities: usize,
    #[arg(long)]
    size: usize,
    #[arg(long)]
    p_in: f64,
    #[arg(long)]
    p_out: f64,
    #[arg(long)]
    shuffle: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    kernel: KernelArgs,
    #[command(flatten)]
    exec: ExecArgs,
    #[arg(long, value_enum, default_value_t = StrategyArg::Warpshared)]
    strategy: StrategyArg,
    /// Seed for the random input features.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Force renumbering; by default the span rule decides.
    #[arg(long, conflicts_with = "no_reorder")]
    reorder: bool,
    #[arg(long)]
    no_reorder: bool,
    /// Cost report destination; stdout when absent.
    #[arg(long)]
    out: Option<String>,
    /// Write the aggregated features (original node order) as CSV.
    #[arg(long)]
    features_out: Option<String>,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StrategyArg {
    Naive,
    Unit,
    Warpshared,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Naive => Strategy::NaiveAtomic,
            StrategyArg::Unit => Strategy::UnitSync,
            StrategyArg::Warpshared => Strategy::WarpShared,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DimModeArg {
    Seq,
    Cyclic,
}

impl From<DimModeArg> for DimMode {
    fn from(m: DimModeArg) -> Self {
        match m {
            DimModeArg::Seq => DimMode::Sequential,
            DimModeArg::Cyclic => DimMode::Cyclic,
        }
    }
}

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_INVARIANT: u8 = 3;

/// A stage-tagged error carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub stage: &'static str,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, stage: &'static str, message: impl Into<String>) -> Self {
        Self { code, stage, message: message.into() }
    }

    pub fn from_core(stage: &'static str, err: Error) -> Self {
        let code = match err {
            Error::InvalidParams(_) => EXIT_USAGE,
            Error::Precondition(_) => EXIT_INVARIANT,
            Error::Parse { .. } | Error::Domain(_) | Error::Search(_) | Error::Io(_) | Error::Json(_) => EXIT_INPUT,
        };
        Self::new(code, stage, err.to_string())
    }
}

/// Tags a core result with the stage it came from.
pub trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, Failure>;
}

impl<T, E: Into<Error>> Stage<T> for Result<T, E> {
    fn stage(self, stage: &'static str) -> Result<T, Failure> {
        self.map_err(|e| Failure::from_core(stage, e.into()))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error [{}]: {}", f.stage, f.message);
            ExitCode::from(f.code)
        }
    }
}
