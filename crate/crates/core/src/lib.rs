//! Explicit subgradient-type methods for bilevel convex optimization.
//!
//! The iteration alternates an optimality step on the primary objective, an
//! optimality step on the secondary objective and a feasibility step:
//!
//! ```text
//! x_{k+1/3} = O_f0(λ_k, x_k)
//! x_{k+2/3} = O_f1(μ_k, x_{k+1/3})
//! x_{k+1}   = P_X0(x_{k+2/3})
//! ```
//!
//! Operators only need to satisfy two inequalities (a descent-type bound and a
//! movement bound), so projected gradient, incremental subgradient, proximal
//! soft-thresholding and iterated subgradient steps all plug into the same
//! loop. The [`tomo`] module provides a parallel-beam testbed used by the
//! concrete solvers in [`solvers`].

// `!(a > b)` is used on purpose so NaN lands on the rejecting side.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod feasibility;
pub mod framework;
pub mod image;
pub mod objectives;
pub mod operator;
pub mod operators;
pub mod problem;
pub mod schedule;
pub mod solvers;
pub mod sparse;
pub mod stopping;
pub mod tomo;
pub mod trace;
pub mod transform;
pub mod tv;
pub mod vector;

pub use error::{Error, Result, Substep};
pub use framework::{run_bilevel, BilevelRunner, Resumable};
pub use image::Image;
pub use operator::{OperatorMeta, OptimalityOperator};
pub use problem::{BilevelProblem, ComponentObjective, Objective};
pub use schedule::StepSchedule;
pub use trace::{IterationRecord, SolverTrace};
