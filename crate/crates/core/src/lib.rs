//! Input-driven scheduling for GNN aggregation on a simulated GPU.
//!
//! The pipeline loads a graph ([`graph`]), optionally renumbers it so that
//! communities occupy contiguous id ranges ([`renumber`]), splits the work into
//! neighbor groups and dimension lanes mapped onto warps ([`schedule`]), plans
//! shared-memory slots and leader warps ([`memplan`]), then executes and costs
//! the aggregation ([`engine`]). [`decider`] picks kernel parameters from the
//! input's shape.
//!
//! Numeric code is generic over [`Scalar`]; [`FeatureMatrix`] is the `f64`
//! instantiation used throughout the pipeline.

pub mod decider;
pub mod engine;
pub mod error;
pub mod generate;
pub mod graph;
pub mod matrix;
pub mod memplan;
pub mod renumber;
pub mod scalar;
pub mod schedule;

pub use error::{Error, Result};
pub use graph::{CsrGraph, DegreeStats, EdgeList, NodeId};
pub use matrix::Matrix;
pub use scalar::Scalar;
pub use schedule::{DimMode, KernelParams};

pub type FeatureMatrix = Matrix<f64>;
pub type FeatureMatrixF32 = Matrix<f32>;
