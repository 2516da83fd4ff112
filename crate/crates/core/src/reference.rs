//! Centralized oracle for `x*`, `F(x*)` and a multiplier `λ*`.
//!
//! Runs gradient ascent on the unregularized dual
//! `d(λ) = Σ_i min_{X_i} f_i(x_i) + λᵀ(A_i x_i − b_i)`, which is smooth with
//! constant `L = Σ_i ‖A_i‖²/τ_i`, using the fixed step `1/L`.

use crate::linalg::{spectral_norm, Vector};
use crate::localsolve::solve_local;
use crate::problem::CoupledProblem;
use crate::{Error, Result};

pub const DEFAULT_MAX_ITERS: usize = 2_000_000;
const DIVERGENCE_NORM: f64 = 1e9;

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub x: Vec<Vector>,
    pub f_star: f64,
    pub lambda: Vector,
    /// `‖Σ_i (A_i x_i − b_i)‖` at the returned point.
    pub violation: f64,
    pub iterations: usize,
}

pub fn solve_centralized(problem: &CoupledProblem, tol: f64) -> Result<ReferenceSolution> {
    solve_centralized_with(problem, tol, DEFAULT_MAX_ITERS)
}

pub fn solve_centralized_with(problem: &CoupledProblem, tol: f64, max_iters: usize) -> Result<ReferenceSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let lipschitz: f64 = problem
        .agents()
        .iter()
        .map(|a| spectral_norm(a.a()).powi(2) / a.tau())
        .sum();
    if lipschitz == 0.0 {
        // nothing couples the agents; the constraint reduces to Σ b_i = 0
        let x = primal(problem, &Vector::zeros(problem.p()))?;
        return finish(problem, x, Vector::zeros(problem.p()), 0, tol);
    }
    let step = 1.0 / lipschitz;
    let mut lambda = Vector::zeros(problem.p());
    for iter in 0..max_iters {
        let x = primal(problem, &lambda)?;
        let residual = problem.coupling_residual(&x);
        if residual.norm() <= tol {
            return finish(problem, x, lambda, iter, tol);
        }
        lambda.axpy(step, &residual, 1.0);
        if lambda.norm() > DIVERGENCE_NORM {
            return Err(Error::IllPosed(format!(
                "dual norm exceeded {DIVERGENCE_NORM:e} after {} iterations",
                iter + 1
            )));
        }
    }
    Err(Error::IllPosed(format!(
        "violation still above {tol:e} after {max_iters} iterations"
    )))
}

fn primal(problem: &CoupledProblem, lambda: &Vector) -> Result<Vec<Vector>> {
    problem.agents().iter().map(|a| solve_local(a, lambda)).collect()
}

fn finish(
    problem: &CoupledProblem,
    x: Vec<Vector>,
    lambda: Vector,
    iterations: usize,
    tol: f64,
) -> Result<ReferenceSolution> {
    let violation = problem.coupling_residual(&x).norm();
    if violation > tol {
        return Err(Error::IllPosed(format!(
            "uncoupled problem has violation {violation:e}"
        )));
    }
    Ok(ReferenceSolution {
        f_star: problem.objective(&x),
        x,
        lambda,
        violation,
        iterations,
    })
}
