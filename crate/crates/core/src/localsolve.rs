//! Per-agent inner minimization and the regularized dual gradient.
//!
//! `x_i(λ) = argmin_{x ∈ X_i} f_i(x) + λᵀ(A_i x − b_i)`; the `−(γ_i/2)λᵀλ`
//! term of the regularized Lagrangian does not depend on `x` and is dropped.

use crate::linalg::{all_finite, Vector};
use crate::problem::{AgentProblem, ObjectiveSpec, NUM_RATE_OFFSET, NUM_UTILITY_SCALE};
use crate::{Error, Result};

/// Successive-iterate tolerance of the projected gradient fallback.
pub const INNER_TOLERANCE: f64 = 1e-10;
const INNER_MAX_ITERS: usize = 1_000_000;

/// Minimizer of the agent's Lagrangian term over its box at multiplier `lambda`.
pub fn solve_local(agent: &AgentProblem, lambda: &Vector) -> Result<Vector> {
    if lambda.len() != agent.coupling_dim() {
        return Err(Error::InvalidInput(format!(
            "multiplier has length {}, expected {}",
            lambda.len(),
            agent.coupling_dim()
        )));
    }
    if !all_finite(lambda) {
        return Err(Error::InvalidInput("multiplier has non-finite entries".into()));
    }
    let price = agent.a().tr_mul(lambda);
    let (lower, upper) = (agent.lower(), agent.upper());
    let x = match agent.objective() {
        ObjectiveSpec::DiagonalQuadratic { diag, lin } => Vector::from_fn(agent.dim(), |k, _| {
            ((-lin[k] - price[k]) / diag[k]).clamp(lower[k], upper[k])
        }),
        ObjectiveSpec::LogUtility { weight } => {
            let rho = price[0];
            let rate = if rho <= 0.0 {
                upper[0]
            } else {
                (NUM_UTILITY_SCALE * weight / rho - NUM_RATE_OFFSET).clamp(lower[0], upper[0])
            };
            Vector::from_element(1, rate)
        }
        ObjectiveSpec::GeneralSmooth(obj) => {
            let step = 1.0 / obj.lipschitz();
            let mut x = agent.project(&((lower + upper) * 0.5));
            let mut converged = false;
            for _ in 0..INNER_MAX_ITERS {
                let grad = obj.gradient(&x) + &price;
                let next = agent.project(&(&x - grad * step));
                let moved = (&next - &x).norm();
                x = next;
                if moved < INNER_TOLERANCE {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::IllPosed("projected gradient did not settle".into()));
            }
            x
        }
    };
    Ok(x)
}

/// `∇φ_i(λ) = A_i x_i(λ) − b_i − γ_i λ`.
pub fn dual_gradient(agent: &AgentProblem, lambda: &Vector) -> Result<Vector> {
    let x = solve_local(agent, lambda)?;
    Ok(agent.residual(&x) - lambda * agent.gamma())
}
