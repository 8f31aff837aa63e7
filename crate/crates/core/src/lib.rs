//! Forward-backward (thresholding gradient) methods for
//! `min_x ½‖Ax − y‖² + Σₖ σ_{Iₖ}(xₖ) + ψₖ(xₖ)`, with support-identification and
//! convergence-rate diagnostics.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod conditioning;
pub mod error;
pub mod io;
pub mod operators;
pub mod regularizers;
pub mod solver;
pub mod support;

pub use error::{Error, Result};
pub use operators::{DenseMatrix, LeastSquaresTerm, LinearOperator};
pub use regularizers::{CustomPenalty, Interval, ScalarPenalty, SeparableRegularizer};
pub use solver::{run, IterateTrace, Problem, SolverConfig};
pub use support::{IndexSet, SupportReport};
