//! Distributed regularized dual gradient method over time-varying directed graphs.
//!
//! Each of `m` agents owns a strongly convex objective `f_i` on a box `X_i` and
//! the agents are coupled through `Σ_i (A_i x_i − b_i) = 0`. The agents run
//! push-sum consensus on a regularized dual variable while solving their local
//! subproblems in closed form, using only column-stochastic mixing. The
//! ergodic primal average `x̂[T]` carries the convergence guarantees.
//!
//! Module map:
//!
//! - [`graph`]: time-varying directed communication graphs and their
//!   column-stochastic weight matrices.
//! - [`problem`]: the coupled problem, including the network utility
//!   maximization instances.
//! - [`localsolve`]: per-agent inner minimization and regularized dual gradient.
//! - [`engine`]: the synchronous round loop, ergodic averages and stopping rules.
//! - [`baseline`]: a doubly-stochastic dual decomposition baseline for comparison.
//! - [`reference`](mod@reference): a centralized dual ascent oracle for `x*` and `F(x*)`.
//! - [`metrics`]: per-round observables, rate-bound evaluators and rate fitting.
//! - [`cli`]: experiment configs, orchestration and CSV output behind the `drdga` binary.
//!
//! The `examples/` directory has one runnable program per capability.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod cli;
pub mod engine;
mod error;
pub mod graph;
pub mod linalg;
pub mod localsolve;
pub mod metrics;
pub mod problem;
pub mod reference;

pub use error::{Error, Result};
