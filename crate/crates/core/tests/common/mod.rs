#![allow(dead_code)]

use gnnsched_core::generate::random_edge_list;
use gnnsched_core::graph::{to_csr, CsrGraph};
use gnnsched_core::Matrix;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_graph(n: usize, edges: usize, seed: u64, symmetrize: bool) -> CsrGraph {
    to_csr(&random_edge_list(n, edges, seed).unwrap(), symmetrize)
}

/// Features drawn from `[0, 1)` so sums cannot cancel.
pub fn positive_features(n: usize, dim: usize, seed: u64) -> Matrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_fn(n, dim, |_, _| rng.gen::<f64>())
}

pub fn signed_matrix(rows: usize, cols: usize, seed: u64) -> Matrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn dense(m: &Matrix<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.values())
}

pub fn adjacency(g: &CsrGraph) -> DMatrix<f64> {
    let n = g.num_nodes();
    let mut a = DMatrix::zeros(n, n);
    for v in 0..n {
        for &u in g.neighbors(v) {
            a[(v, u)] += 1.0;
        }
    }
    a
}

pub fn max_rel(got: &Matrix<f64>, want: &DMatrix<f64>) -> f64 {
    assert_eq!((got.rows(), got.cols()), (want.nrows(), want.ncols()));
    let mut worst = 0.0f64;
    for r in 0..got.rows() {
        for c in 0..got.cols() {
            let (a, b) = (got.get(r, c), want[(r, c)]);
            let scale = b.abs().max(1e-300);
            let d = if b == 0.0 { a.abs() } else { (a - b).abs() / scale };
            worst = worst.max(d);
        }
    }
    worst
}
