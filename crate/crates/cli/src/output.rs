//! Report formats. CSV column order is fixed; JSON mirrors it.

use std::fs::File;
use std::io::{self, Write};

use gnnsched_core::engine::CostReport;
use gnnsched_core::FeatureMatrix;
use serde::Serialize;

use crate::{Failure, EXIT_INPUT};

#[derive(Debug, Serialize)]
pub struct CostRow {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategy: Option<String>,
    pub atomic_ops: u64,
    pub global_reads: u64,
    pub global_writes: u64,
    pub global_transactions: u64,
    pub shared_bytes_per_block: u64,
    pub cache_hits: u64,
    pub cache_accesses: u64,
    pub cache_hit_rate: f64,
}

impl CostRow {
    pub fn new(strategy: Option<String>, c: &CostReport) -> Self {
        Self {
            strategy,
            atomic_ops: c.atomic_ops,
            global_reads: c.global_reads,
            global_writes: c.global_writes,
            global_transactions: c.global_transactions,
            shared_bytes_per_block: c.shared_bytes_per_block,
            cache_hits: c.cache_hits,
            cache_accesses: c.cache_accesses,
            cache_hit_rate: c.cache_hit_rate(),
        }
    }
}

fn io_failure(e: impl std::fmt::Display) -> Failure {
    Failure::new(EXIT_INPUT, "output", e.to_string())
}

/// Opens `path`, or stdout when absent.
pub fn sink(path: Option<&str>) -> Result<Box<dyn Write>, Failure> {
    match path {
        Some(p) => File::create(p)
            .map(|f| Box::new(io::BufWriter::new(f)) as Box<dyn Write>)
            .map_err(|e| io_failure(format!("{p}: {e}"))),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

pub fn write_text(path: Option<&str>, text: &str) -> Result<(), Failure> {
    let mut w = sink(path)?;
    w.write_all(text.as_bytes()).map_err(io_failure)?;
    if !text.ends_with('\n') {
        w.write_all(b"\n").map_err(io_failure)?;
    }
    w.flush().map_err(io_failure)
}

pub fn write_json<T: Serialize + ?Sized>(path: Option<&str>, value: &T) -> Result<(), Failure> {
    let s = serde_json::to_string_pretty(value).map_err(io_failure)?;
    write_text(path, &s)
}

pub fn write_costs(path: Option<&str>, rows: &[CostRow], json: bool) -> Result<(), Failure> {
    if json {
        return match rows {
            [one] => write_json(path, one),
            many => write_json(path, many),
        };
    }
    let mut w = csv::Writer::from_writer(sink(path)?);
    for r in rows {
        w.serialize(r).map_err(io_failure)?;
    }
    w.flush().map_err(io_failure)
}

/// One CSV row per node, no header.
pub fn write_features(path: &str, y: &FeatureMatrix) -> Result<(), Failure> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(sink(Some(path))?);
    for r in 0..y.rows() {
        w.write_record(y.row(r).iter().map(|v| v.to_string())).map_err(io_failure)?;
    }
    w.flush().map_err(io_failure)
}
