//! Weighted `l^p` sparsity-constrained Tikhonov regularization of linear
//! inverse problems,
//!
//! ```text
//! Psi(u) = ||K u - g||^2 + alpha * sum_k w_k |u_k|^p,    0 <= p <= 2,
//! ```
//!
//! with the scalar thresholding maps `H^p_alpha`, iterative and diagonal
//! minimizers, source-condition and Bregman-distance tooling, and the
//! experiment harness driven by the `lpsparse` binary.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod operators;
pub mod penalty;
mod roots;
pub mod seqspace;
pub mod solvers;
pub mod source;
pub mod thresholding;

pub use error::{Error, Result};
pub use operators::{DenseNetOperator, DenseOperator, DiagonalOperator, ForwardOperator, LinearOperator};
pub use penalty::WeightedPenalty;
pub use seqspace::{TruncatedSequence, WeightSequence};
pub use solvers::{solve_diagonal, solve_iterative, IterativeOptions, RegularizedProblem, SolveResult};
pub use thresholding::{threshold, ThresholdSpec};
