//! Graph ingestion, CSR storage, degree statistics and the averaged edge span.
//!
//! Edge lists are whitespace-separated `src dst` pairs, one per line. Lines
//! starting with `#` or `%` are comments and an optional `nodes <n>` line
//! (before the first edge) fixes the node count.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

pub type NodeId = usize;

/// Directed edge list in the exact order it was read.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeList {
    num_nodes: usize,
    edges: Vec<(NodeId, NodeId)>,
}

impl EdgeList {
    pub fn new(num_nodes: usize, edges: Vec<(NodeId, NodeId)>) -> Result<Self> {
        if let Some(&(s, d)) = edges.iter().find(|&&(s, d)| s >= num_nodes || d >= num_nodes) {
            return Err(domain(format!("edge ({s}, {d}) out of range for {num_nodes} nodes")));
        }
        Ok(Self { num_nodes, edges })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    /// Writes the list in the text format accepted by [`load_edge_list`],
    /// always including the `nodes` header.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "nodes {}", self.num_nodes)?;
        for &(s, d) in &self.edges {
            writeln!(out, "{s} {d}")?;
        }
        Ok(())
    }

    /// Relabels every endpoint through `old_to_new`.
    pub fn relabel(&self, old_to_new: &[NodeId]) -> Result<EdgeList> {
        if old_to_new.len() != self.num_nodes {
            return Err(domain(format!(
                "mapping has {} entries, edge list has {} nodes",
                old_to_new.len(),
                self.num_nodes
            )));
        }
        let edges = self.edges.iter().map(|&(s, d)| (old_to_new[s], old_to_new[d])).collect();
        Ok(EdgeList { num_nodes: self.num_nodes, edges })
    }
}

fn parse_id(token: &str, line: usize) -> Result<NodeId> {
    if token.starts_with('-') {
        return Err(Error::Parse { line, message: format!("negative node id `{token}`") });
    }
    token
        .parse::<NodeId>()
        .map_err(|_| Error::Parse { line, message: format!("malformed node id `{token}`") })
}

/// Reads an edge list from text.
pub fn load_edge_list<R: BufRead>(reader: R) -> Result<EdgeList> {
    let mut header: Option<usize> = None;
    let mut edges = Vec::new();
    let mut max_id: Option<NodeId> = None;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let first = tokens.next().unwrap_or_default();
        if first == "nodes" {
            if header.is_some() || !edges.is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    message: "`nodes` header must precede all edges and appear once".into(),
                });
            }
            let n = tokens
                .next()
                .ok_or_else(|| Error::Parse { line: line_no, message: "missing node count".into() })?;
            header = Some(parse_id(n, line_no)?);
            if tokens.next().is_some() {
                return Err(Error::Parse { line: line_no, message: "trailing tokens".into() });
            }
            continue;
        }
        let src = parse_id(first, line_no)?;
        let dst = match tokens.next() {
            Some(t) => parse_id(t, line_no)?,
            None => {
                return Err(Error::Parse { line: line_no, message: "expected `src dst`".into() })
            }
        };
        if tokens.next().is_some() {
            return Err(Error::Parse { line: line_no, message: "trailing tokens".into() });
        }
        if let Some(n) = header {
            if src >= n || dst >= n {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("edge ({src}, {dst}) exceeds declared node count {n}"),
                });
            }
        }
        max_id = Some(max_id.map_or(src.max(dst), |m| m.max(src).max(dst)));
        edges.push((src, dst));
    }

    let num_nodes = header.unwrap_or_else(|| max_id.map_or(0, |m| m + 1));
    Ok(EdgeList { num_nodes, edges })
}

/// Immutable compressed-sparse-row adjacency with rows sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawCsr")]
pub struct CsrGraph {
    num_nodes: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<NodeId>,
}

#[derive(Deserialize)]
struct RawCsr {
    num_nodes: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<NodeId>,
}

impl TryFrom<RawCsr> for CsrGraph {
    type Error = Error;

    fn try_from(raw: RawCsr) -> Result<Self> {
        CsrGraph::from_parts(raw.num_nodes, raw.row_ptr, raw.col_idx)
    }
}

impl CsrGraph {
    /// Builds a graph from raw arrays, checking every CSR invariant.
    pub fn from_parts(num_nodes: usize, row_ptr: Vec<usize>, col_idx: Vec<NodeId>) -> Result<Self> {
        if row_ptr.len() != num_nodes + 1 || row_ptr[0] != 0 || row_ptr[num_nodes] != col_idx.len() {
            return Err(domain("row_ptr must have num_nodes + 1 entries from 0 to num_edges"));
        }
        for v in 0..num_nodes {
            let (a, b) = (row_ptr[v], row_ptr[v + 1]);
            if a > b {
                return Err(domain(format!("row_ptr decreases at node {v}")));
            }
            let row = &col_idx[a..b];
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(domain(format!("row {v} is not strictly ascending")));
            }
            if row.iter().any(|&u| u >= num_nodes) {
                return Err(domain(format!("row {v} references a node out of range")));
            }
        }
        Ok(Self { num_nodes, row_ptr, col_idx })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[NodeId] {
        &self.col_idx
    }

    #[inline]
    pub fn degree(&self, v: NodeId) -> usize {
        self.row_ptr[v + 1] - self.row_ptr[v]
    }

    #[inline]
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.col_idx[self.row_ptr[v]..self.row_ptr[v + 1]]
    }

    pub fn degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.row_ptr.windows(2).map(|w| w[1] - w[0])
    }

    /// Expands back to a directed edge list in row order.
    pub fn to_edge_list(&self) -> EdgeList {
        let edges = (0..self.num_nodes)
            .flat_map(|v| self.neighbors(v).iter().map(move |&u| (v, u)))
            .collect();
        EdgeList { num_nodes: self.num_nodes, edges }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Canonical CSR with sorted rows and duplicate pairs removed.
pub fn to_csr(el: &EdgeList, symmetrize: bool) -> CsrGraph {
    let n = el.num_nodes;
    let mut pairs: Vec<(NodeId, NodeId)> = Vec::with_capacity(el.edges.len() * (1 + symmetrize as usize));
    for &(s, d) in &el.edges {
        pairs.push((s, d));
        if symmetrize {
            pairs.push((d, s));
        }
    }
    pairs.sort_unstable();
    pairs.dedup();

    let mut row_ptr = vec![0usize; n + 1];
    for &(s, _) in &pairs {
        row_ptr[s + 1] += 1;
    }
    for v in 0..n {
        row_ptr[v + 1] += row_ptr[v];
    }
    let col_idx = pairs.into_iter().map(|(_, d)| d).collect();
    CsrGraph { num_nodes: n, row_ptr, col_idx }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeStats {
    pub avg_degree: f64,
    pub max_degree: usize,
    /// Population standard deviation.
    pub stddev_degree: f64,
}

pub fn degree_stats(g: &CsrGraph) -> Result<DegreeStats> {
    let n = g.num_nodes();
    if n == 0 {
        return Err(domain("degree statistics of a graph with no nodes"));
    }
    let avg = g.num_edges() as f64 / n as f64;
    let max = g.degrees().max().unwrap_or(0);
    let var = g.degrees().map(|d| (d as f64 - avg).powi(2)).sum::<f64>() / n as f64;
    Ok(DegreeStats { avg_degree: avg, max_degree: max, stddev_degree: var.sqrt() })
}

/// Averaged edge span: mean `|src - dst|` over the directed edge list.
pub fn aes(el: &EdgeList) -> Result<f64> {
    if el.edges.is_empty() {
        return Err(domain("no edges"));
    }
    let total: u128 = el.edges.iter().map(|&(s, d)| s.abs_diff(d) as u128).sum();
    Ok(total as f64 / el.edges.len() as f64)
}

/// All-ones embedding matrix.
pub fn ones_features<T: Scalar>(n: usize, dim: usize) -> Matrix<T> {
    Matrix::filled(n, dim, T::one())
}
