//! Community-aware node renumbering.
//!
//! Communities come from greedy agglomerative modularity maximization: every
//! node starts alone and the adjacent pair with the largest modularity gain is
//! merged until no merge improves modularity. Nodes are then renumbered by
//! `(community, old id)` so that each community occupies a contiguous id range.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::graph::{aes, to_csr, CsrGraph, EdgeList, NodeId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommunityAssignment {
    com_idx: Vec<usize>,
    num_communities: usize,
}

impl CommunityAssignment {
    /// Validates that ids are dense in `[0, num_communities)`.
    pub fn new(com_idx: Vec<usize>) -> Result<Self> {
        let num_communities = com_idx.iter().map(|&c| c + 1).max().unwrap_or(0);
        let mut used = vec![false; num_communities];
        for &c in &com_idx {
            used[c] = true;
        }
        if let Some(missing) = used.iter().position(|&u| !u) {
            return Err(domain(format!("community id {missing} is unused; ids must be dense")));
        }
        Ok(Self { com_idx, num_communities })
    }

    pub fn com_idx(&self) -> &[usize] {
        &self.com_idx
    }

    pub fn num_communities(&self) -> usize {
        self.num_communities
    }

    /// Members of each community in ascending node order.
    pub fn members(&self) -> Vec<Vec<NodeId>> {
        let mut out = vec![Vec::new(); self.num_communities];
        for (v, &c) in self.com_idx.iter().enumerate() {
            out[c].push(v);
        }
        out
    }
}

/// Undirected simple view of a CSR graph: each unordered pair once, self-loops kept.
struct UndirectedEdges {
    num_nodes: usize,
    pairs: Vec<(NodeId, NodeId)>,
}

impl UndirectedEdges {
    fn from_csr(g: &CsrGraph) -> Self {
        let mut pairs: Vec<(NodeId, NodeId)> = (0..g.num_nodes())
            .flat_map(|v| g.neighbors(v).iter().map(move |&u| (v.min(u), v.max(u))))
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        Self { num_nodes: g.num_nodes(), pairs }
    }

    fn degrees(&self) -> Vec<u64> {
        let mut deg = vec![0u64; self.num_nodes];
        for &(a, b) in &self.pairs {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }
}

/// Newman modularity `Σ_c (e_c/m − (d_c/2m)²)` of `ca` on the undirected view of `g`.
pub fn modularity(g: &CsrGraph, ca: &CommunityAssignment) -> Result<f64> {
    if ca.com_idx.len() != g.num_nodes() {
        return Err(domain("assignment size does not match graph"));
    }
    let und = UndirectedEdges::from_csr(g);
    let m = und.pairs.len() as f64;
    if m == 0.0 {
        return Ok(0.0);
    }
    let mut internal = vec![0u64; ca.num_communities];
    let mut degree = vec![0u64; ca.num_communities];
    for &(a, b) in &und.pairs {
        let (ca_, cb) = (ca.com_idx[a], ca.com_idx[b]);
        degree[ca_] += 1;
        degree[cb] += 1;
        if ca_ == cb {
            internal[ca_] += 1;
        }
    }
    Ok(internal
        .iter()
        .zip(&degree)
        .map(|(&e, &d)| e as f64 / m - (d as f64 / (2.0 * m)).powi(2))
        .sum())
}

/// Heap entry for a candidate merge. Ordered by gain, then by the smallest pair.
#[derive(Debug, PartialEq, Eq)]
struct Candidate {
    /// Gain scaled by `2m²`: `2m·e_ij − d_i·d_j`.
    gain: i128,
    pair: Reverse<(usize, usize)>,
    versions: (u32, u32),
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain.cmp(&other.gain).then_with(|| self.pair.cmp(&other.pair))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Greedy agglomerative modularity clustering.
///
/// Gains are compared exactly in integer arithmetic. Among equal gains the
/// lexicographically smallest `(i, j)` pair (with `i < j`) merges first, and
/// the merged community keeps id `i`.
pub fn detect_communities(g: &CsrGraph) -> CommunityAssignment {
    let und = UndirectedEdges::from_csr(g);
    let n = und.num_nodes;
    let two_m = 2 * und.pairs.len() as i128;

    let mut degree: Vec<u64> = und.degrees();
    let mut links: Vec<BTreeMap<usize, u64>> = vec![BTreeMap::new(); n];
    for &(a, b) in &und.pairs {
        if a != b {
            *links[a].entry(b).or_default() += 1;
            *links[b].entry(a).or_default() += 1;
        }
    }
    let mut parent: Vec<usize> = (0..n).collect();
    let mut version = vec![0u32; n];
    let mut alive = vec![true; n];

    let gain = |e: u64, di: u64, dj: u64| two_m * e as i128 - di as i128 * dj as i128;
    let mut heap = BinaryHeap::new();
    for i in 0..n {
        for (&j, &e) in links[i].range(i + 1..) {
            heap.push(Candidate {
                gain: gain(e, degree[i], degree[j]),
                pair: Reverse((i, j)),
                versions: (0, 0),
            });
        }
    }

    while let Some(top) = heap.pop() {
        let Reverse((i, j)) = top.pair;
        if !alive[i] || !alive[j] || top.versions != (version[i], version[j]) {
            continue;
        }
        if top.gain <= 0 {
            break;
        }
        // merge j into i
        let absorbed = std::mem::take(&mut links[j]);
        for (k, e) in absorbed {
            if k == i {
                continue;
            }
            *links[i].entry(k).or_default() += e;
            links[k].remove(&j);
            *links[k].entry(i).or_default() += e;
        }
        links[i].remove(&j);
        degree[i] += degree[j];
        alive[j] = false;
        parent[j] = i;
        version[i] += 1;
        for (&k, &e) in &links[i] {
            let (a, b) = (i.min(k), i.max(k));
            heap.push(Candidate {
                gain: gain(e, degree[a], degree[b]),
                pair: Reverse((a, b)),
                versions: (version[a], version[b]),
            });
        }
    }

    fn root(parent: &[usize], mut v: usize) -> usize {
        while parent[v] != v {
            v = parent[v];
        }
        v
    }
    // Surviving ids are the smallest member of each community, so numbering
    // them in ascending order numbers communities by first appearance.
    let mut dense = vec![usize::MAX; n];
    let mut next = 0;
    let mut com_idx = Vec::with_capacity(n);
    for v in 0..n {
        let r = root(&parent, v);
        if dense[r] == usize::MAX {
            dense[r] = next;
            next += 1;
        }
        com_idx.push(dense[r]);
    }
    CommunityAssignment { com_idx, num_communities: next }
}

/// Mutually inverse permutations between old and new node ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MappingFile", into = "MappingFile")]
pub struct NodeMapping {
    old_to_new: Vec<NodeId>,
    new_to_old: Vec<NodeId>,
}

#[derive(Serialize, Deserialize)]
struct MappingFile {
    old_to_new: Vec<NodeId>,
}

impl TryFrom<MappingFile> for NodeMapping {
    type Error = Error;

    fn try_from(f: MappingFile) -> Result<Self> {
        NodeMapping::from_old_to_new(f.old_to_new)
    }
}

impl From<NodeMapping> for MappingFile {
    fn from(m: NodeMapping) -> Self {
        MappingFile { old_to_new: m.old_to_new }
    }
}

impl NodeMapping {
    pub fn identity(n: usize) -> Self {
        Self { old_to_new: (0..n).collect(), new_to_old: (0..n).collect() }
    }

    pub fn from_old_to_new(old_to_new: Vec<NodeId>) -> Result<Self> {
        let n = old_to_new.len();
        let mut new_to_old = vec![usize::MAX; n];
        for (old, &new) in old_to_new.iter().enumerate() {
            if new >= n || new_to_old[new] != usize::MAX {
                return Err(domain(format!("old_to_new is not a permutation (entry {old} -> {new})")));
            }
            new_to_old[new] = old;
        }
        Ok(Self { old_to_new, new_to_old })
    }

    pub fn len(&self) -> usize {
        self.old_to_new.len()
    }

    pub fn is_empty(&self) -> bool {
        self.old_to_new.is_empty()
    }

    pub fn old_to_new(&self) -> &[NodeId] {
        &self.old_to_new
    }

    pub fn new_to_old(&self) -> &[NodeId] {
        &self.new_to_old
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Orders nodes by `(com_idx, old id)`; a node's new id is its rank.
pub fn build_mapping(ca: &CommunityAssignment) -> NodeMapping {
    let mut order: Vec<NodeId> = (0..ca.com_idx.len()).collect();
    order.sort_by_key(|&v| (ca.com_idx[v], v));
    let mut old_to_new = vec![0; order.len()];
    for (new, &old) in order.iter().enumerate() {
        old_to_new[old] = new;
    }
    NodeMapping { old_to_new, new_to_old: order }
}

/// Relabels `g` through `m`, returning canonical CSR.
pub fn apply_mapping(g: &CsrGraph, m: &NodeMapping) -> Result<CsrGraph> {
    if m.len() != g.num_nodes() {
        return Err(domain(format!(
            "mapping covers {} nodes, graph has {}",
            m.len(),
            g.num_nodes()
        )));
    }
    let relabeled = g.to_edge_list().relabel(&m.old_to_new)?;
    Ok(to_csr(&relabeled, false))
}

/// The reorder rule `√AES > ⌊√N / 100⌋`.
pub fn reorder_rule(aes: f64, num_nodes: usize) -> bool {
    aes.sqrt() > ((num_nodes as f64).sqrt() / 100.0).floor()
}

/// Whether renumbering is expected to pay off for this edge list.
pub fn should_reorder(el: &EdgeList) -> Result<bool> {
    Ok(reorder_rule(aes(el)?, el.num_nodes()))
}

/// Detects communities and derives the renumbering in one step.
pub fn renumber(g: &CsrGraph) -> (CommunityAssignment, NodeMapping) {
    let ca = detect_communities(g);
    let m = build_mapping(&ca);
    (ca, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clique_pair() -> CsrGraph {
        let mut edges = Vec::new();
        for base in [0, 4] {
            for a in 0..4 {
                for b in a + 1..4 {
                    edges.push((base + a, base + b));
                }
            }
        }
        to_csr(&EdgeList::new(8, edges).unwrap(), true)
    }

    /// Modularity from a dense adjacency matrix, independent of the library's
    /// undirected edge bookkeeping.
    fn dense_modularity(adj: &[Vec<bool>], labels: &[usize]) -> f64 {
        let n = adj.len();
        let mut m = 0.0f64;
        let mut deg = vec![0.0f64; n];
        for a in 0..n {
            for b in a..n {
                if adj[a][b] {
                    m += 1.0;
                    deg[a] += 1.0;
                    deg[b] += 1.0;
                }
            }
        }
        if m == 0.0 {
            return 0.0;
        }
        let mut q = 0.0;
        let k = labels.iter().max().map_or(0, |&x| x + 1);
        for c in 0..k {
            let mut e = 0.0f64;
            let mut d = 0.0f64;
            for a in 0..n {
                if labels[a] != c {
                    continue;
                }
                d += deg[a];
                for b in a..n {
                    if labels[b] == c && adj[a][b] {
                        e += 1.0;
                    }
                }
            }
            q += e / m - (d / (2.0 * m)).powi(2);
        }
        q
    }

    /// Every set partition of `n` nodes as a restricted growth string.
    fn all_partitions(n: usize) -> Vec<Vec<usize>> {
        fn rec(i: usize, n: usize, cur: &mut Vec<usize>, max: usize, out: &mut Vec<Vec<usize>>) {
            if i == n {
                out.push(cur.clone());
                return;
            }
            for c in 0..=max + 1 {
                if i == 0 && c > 0 {
                    break;
                }
                cur.push(c);
                rec(i + 1, n, cur, if i == 0 { 0 } else { max.max(c) }, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        if n > 0 {
            rec(0, n, &mut Vec::new(), 0, &mut out);
        }
        out
    }

    fn exhaustive_best(g: &CsrGraph) -> Vec<usize> {
        let n = g.num_nodes();
        let mut adj = vec![vec![false; n]; n];
        for v in 0..n {
            for &u in g.neighbors(v) {
                adj[v.min(u)][v.max(u)] = true;
            }
        }
        let mut best = (f64::NEG_INFINITY, Vec::new());
        for p in all_partitions(n) {
            let q = dense_modularity(&adj, &p);
            if q > best.0 + 1e-12 {
                best = (q, p);
            }
        }
        best.1
    }

    #[test]
    fn partition_enumerator_counts_bell_numbers() {
        assert_eq!(all_partitions(4).len(), 15);
        assert_eq!(all_partitions(8).len(), 4140);
    }

    #[test]
    fn two_cliques_match_exhaustive_optimum() {
        let g = clique_pair();
        let ca = detect_communities(&g);
        assert_eq!(ca.num_communities(), 2);
        assert_eq!(ca.members(), vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7]]);
        assert_eq!(ca.com_idx(), exhaustive_best(&g).as_slice());
        let q = modularity(&g, &ca).unwrap();
        assert!((q - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_edge_is_one_community() {
        let g = to_csr(&EdgeList::new(2, vec![(0, 1)]).unwrap(), true);
        let ca = detect_communities(&g);
        assert_eq!(ca.num_communities(), 1);
        assert_eq!(ca.com_idx(), exhaustive_best(&g).as_slice());
    }

    #[test]
    fn empty_graph_is_singletons() {
        let g = to_csr(&EdgeList::new(3, vec![]).unwrap(), true);
        let ca = detect_communities(&g);
        assert_eq!(ca.com_idx(), &[0, 1, 2]);
        assert_eq!(ca.num_communities(), 3);
    }

    #[test]
    fn small_graphs_reach_exhaustive_optimum_value_or_close() {
        // Greedy merging is a heuristic; on these hand graphs it is optimal.
        let cases = [
            (6, vec![(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]),
            (5, vec![(0, 1), (1, 2), (2, 3), (3, 4)]),
        ];
        for (n, edges) in cases {
            let g = to_csr(&EdgeList::new(n, edges).unwrap(), true);
            let ca = detect_communities(&g);
            let best = CommunityAssignment::new(exhaustive_best(&g)).unwrap();
            let got = modularity(&g, &ca).unwrap();
            let want = modularity(&g, &best).unwrap();
            assert!(got >= want - 1e-12, "{got} < {want}");
        }
    }

    #[test]
    fn mapping_examples() {
        let m = build_mapping(&CommunityAssignment::new(vec![1, 0, 1, 0]).unwrap());
        assert_eq!(m.old_to_new(), &[2, 0, 3, 1]);
        let m = build_mapping(&CommunityAssignment::new(vec![0, 0, 0]).unwrap());
        assert_eq!(m.old_to_new(), &[0, 1, 2]);
        let m = build_mapping(&CommunityAssignment::new(vec![2, 1, 0]).unwrap());
        assert_eq!(m.old_to_new(), &[2, 1, 0]);
        assert_eq!(m.new_to_old(), &[2, 1, 0]);
    }

    #[test]
    fn sparse_community_ids_rejected() {
        assert!(CommunityAssignment::new(vec![0, 2]).is_err());
    }

    #[test]
    fn apply_mapping_examples() {
        let path = to_csr(&EdgeList::new(3, vec![(0, 1), (1, 2)]).unwrap(), true);
        assert_eq!(apply_mapping(&path, &NodeMapping::identity(3)).unwrap(), path);
        let rev = NodeMapping::from_old_to_new(vec![2, 1, 0]).unwrap();
        let out = apply_mapping(&path, &rev).unwrap();
        assert_eq!(out.neighbors(1), &[0, 2]);
        assert_eq!(out.neighbors(2), &[1]);
        assert!(apply_mapping(&path, &NodeMapping::identity(4)).is_err());
    }

    #[test]
    fn reorder_rule_examples() {
        assert!(reorder_rule(4.0, 10_000));
        assert!(!reorder_rule(25.0, 1_000_000));
        assert!(!reorder_rule(0.0, 100));
        let loops = EdgeList::new(100, (0..100).map(|v| (v, v)).collect()).unwrap();
        assert!(!should_reorder(&loops).unwrap());
        assert!(should_reorder(&EdgeList::new(3, vec![]).unwrap()).is_err());
    }

    #[test]
    fn mapping_json_roundtrip_and_validation() {
        let m = NodeMapping::from_old_to_new(vec![1, 2, 0]).unwrap();
        let s = m.to_json().unwrap();
        assert_eq!(s, r#"{"old_to_new":[1,2,0]}"#);
        assert_eq!(NodeMapping::from_json(&s).unwrap(), m);
        assert!(NodeMapping::from_json(r#"{"old_to_new":[0,0]}"#).is_err());
    }
}
