//! Synthetic graphs for fixtures and experiments.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::graph::{EdgeList, NodeId};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Planted-partition (stochastic block) model with equal-size communities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedPartition {
    pub communities: usize,
    pub size: usize,
    pub p_in: f64,
    pub p_out: f64,
    /// Randomly permute node ids after generation.
    pub shuffle: bool,
    pub seed: u64,
}

impl PlantedPartition {
    pub fn num_nodes(&self) -> usize {
        self.communities * self.size
    }

    /// Each unordered pair `a < b` is emitted once as `(a, b)`, with
    /// probability `p_in` inside a community and `p_out` across.
    pub fn generate(&self) -> Result<EdgeList> {
        for (name, p) in [("p_in", self.p_in), ("p_out", self.p_out)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(domain(format!("{name} = {p} is not a probability")));
            }
        }
        let n = self.num_nodes();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                let p = if a / self.size == b / self.size { self.p_in } else { self.p_out };
                if rng.gen_bool(p) {
                    edges.push((a, b));
                }
            }
        }
        let el = EdgeList::new(n, edges)?;
        if !self.shuffle {
            return Ok(el);
        }
        let mut perm: Vec<NodeId> = (0..n).collect();
        perm.shuffle(&mut rng);
        el.relabel(&perm)
    }
}

/// `num_edges` directed edges drawn uniformly (with replacement) among `n` nodes.
pub fn random_edge_list(n: usize, num_edges: usize, seed: u64) -> Result<EdgeList> {
    if n == 0 && num_edges > 0 {
        return Err(domain("cannot draw edges on an empty node set"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = (0..num_edges).map(|_| (rng.gen_range(0..n), rng.gen_range(0..n))).collect();
    EdgeList::new(n, edges)
}

/// Features drawn uniformly from `[0, 1)`, so neighbor sums never cancel.
pub fn random_features<T: Scalar>(n: usize, dim: usize, seed: u64) -> Matrix<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_fn(n, dim, |_, _| T::from_f64_lossy(rng.gen::<f64>()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forced_probabilities_give_disjoint_cliques() {
        let el = PlantedPartition { communities: 2, size: 4, p_in: 1.0, p_out: 0.0, shuffle: false, seed: 1 }
            .generate()
            .unwrap();
        assert_eq!(el.num_nodes(), 8);
        assert_eq!(el.num_edges(), 12);
        assert!(el.edges().iter().all(|&(a, b)| a / 4 == b / 4));
    }

    #[test]
    fn same_seed_same_graph() {
        let cfg = PlantedPartition { communities: 3, size: 10, p_in: 0.5, p_out: 0.05, shuffle: true, seed: 9 };
        assert_eq!(cfg.generate().unwrap(), cfg.generate().unwrap());
        let other = PlantedPartition { seed: 10, ..cfg };
        assert_ne!(cfg.generate().unwrap(), other.generate().unwrap());
    }

    #[test]
    fn intra_density_matches_expectation() {
        // mean edge count over many seeds against d · n(n-1)/2
        let (n, d) = (20usize, 0.7);
        let runs = 200;
        let total: usize = (0..runs)
            .map(|s| {
                PlantedPartition { communities: 1, size: n, p_in: d, p_out: 0.0, shuffle: false, seed: s }
                    .generate()
                    .unwrap()
                    .num_edges()
            })
            .sum();
        let mean = total as f64 / runs as f64;
        let expected = d * (n * (n - 1) / 2) as f64;
        // std of the mean is sqrt(190 * 0.21 / 200) ≈ 0.45
        assert!((mean - expected).abs() < 2.5, "{mean} vs {expected}");
    }

    #[test]
    fn rejects_bad_probability() {
        let cfg = PlantedPartition { communities: 1, size: 2, p_in: 1.5, p_out: 0.0, shuffle: false, seed: 0 };
        assert!(cfg.generate().is_err());
    }
}
