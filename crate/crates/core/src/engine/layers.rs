//! Forward GCN and GIN layers built on the reference aggregation.

use super::exec::aggregate_oracle;
use crate::error::{domain, Result};
use crate::graph::CsrGraph;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Where the dense update sits relative to the aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GcnOrder {
    AggregateFirst,
    UpdateFirst,
}

/// `D̂^{-1/2} Â D̂^{-1/2} X W`. The update runs first when it shrinks the
/// embedding, so aggregation touches the narrower matrix.
pub fn gcn_layer<T: Scalar>(g: &CsrGraph, x: &Matrix<T>, w: &Matrix<T>, add_self_loops: bool) -> Result<Matrix<T>> {
    let order = if w.cols() < x.cols() { GcnOrder::UpdateFirst } else { GcnOrder::AggregateFirst };
    gcn_layer_ordered(g, x, w, add_self_loops, order)
}

pub fn gcn_layer_ordered<T: Scalar>(
    g: &CsrGraph,
    x: &Matrix<T>,
    w: &Matrix<T>,
    add_self_loops: bool,
    order: GcnOrder,
) -> Result<Matrix<T>> {
    if w.rows() != x.cols() {
        return Err(domain(format!("weight has {} rows, features have {} columns", w.rows(), x.cols())));
    }
    if x.rows() != g.num_nodes() {
        return Err(domain("feature rows do not match node count"));
    }
    // isolated rows of Â are normalized as if their degree were 1
    let inv_sqrt: Vec<T> = (0..g.num_nodes())
        .map(|v| {
            let d = g.degree(v) + add_self_loops as usize;
            T::one() / T::from_f64_lossy(d.max(1) as f64).sqrt()
        })
        .collect();

    let propagate = |h: &Matrix<T>| -> Result<Matrix<T>> {
        let mut scaled = h.clone();
        for (v, &s) in inv_sqrt.iter().enumerate() {
            scaled.row_mut(v).iter_mut().for_each(|e| *e *= s);
        }
        let mut out = aggregate_oracle(g, &scaled)?;
        for (v, &s) in inv_sqrt.iter().enumerate() {
            if add_self_loops {
                let own = scaled.row(v).to_vec();
                out.row_mut(v).iter_mut().zip(own).for_each(|(o, a)| *o += a);
            }
            out.row_mut(v).iter_mut().for_each(|e| *e *= s);
        }
        Ok(out)
    };

    match order {
        GcnOrder::AggregateFirst => propagate(x)?.matmul(w),
        GcnOrder::UpdateFirst => propagate(&x.matmul(w)?),
    }
}

/// Affine map `h ↦ h·W + b` followed by a rectifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine<T> {
    pub weight: Matrix<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Affine<T> {
    pub fn new(weight: Matrix<T>, bias: Vec<T>) -> Result<Self> {
        if bias.len() != weight.cols() {
            return Err(domain("bias length must equal weight columns"));
        }
        Ok(Self { weight, bias })
    }

    pub fn identity(dim: usize) -> Self {
        Self { weight: Matrix::identity(dim), bias: vec![T::zero(); dim] }
    }

    fn apply_relu(&self, h: &Matrix<T>) -> Result<Matrix<T>> {
        let mut out = h.matmul(&self.weight)?;
        for r in 0..out.rows() {
            for (o, &b) in out.row_mut(r).iter_mut().zip(&self.bias) {
                *o = (*o + b).max(T::zero());
            }
        }
        Ok(out)
    }
}

/// `x'_i = h((1 + ε)·x_i + Σ_{j ∈ N(i)} x_j)`, aggregating at full input width.
pub fn gin_layer<T: Scalar>(g: &CsrGraph, x: &Matrix<T>, eps: T, mlp: &Affine<T>) -> Result<Matrix<T>> {
    if mlp.weight.rows() != x.cols() {
        return Err(domain(format!(
            "mlp expects {} input columns, features have {}",
            mlp.weight.rows(),
            x.cols()
        )));
    }
    let mut h = aggregate_oracle(g, x)?;
    let self_weight = T::one() + eps;
    for v in 0..h.rows() {
        for (o, &a) in h.row_mut(v).iter_mut().zip(x.row(v)) {
            *o += self_weight * a;
        }
    }
    mlp.apply_relu(&h)
}
