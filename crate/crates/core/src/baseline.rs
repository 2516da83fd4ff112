//! Dual decomposition with doubly stochastic consensus, used as a comparison
//! baseline for the push-sum method.
//!
//! ```text
//! λ̄_i = Σ_j M_ij λ_j[t]
//! x_i[t+1] = argmin_{X_i} f_i(x) + λ̄_iᵀ(A_i x − b_i)
//! λ_i[t+1] = λ̄_i + (q/(t+1)) (A_i x_i[t+1] − b_i)
//! ```
//!
//! There is no regularization term. Mixing matrices come from the undirected
//! version of each round's graph with Metropolis weights.

use crate::engine::{drive, DualMethod, ErgodicSum, RunConfig, RunOutcome};
use crate::graph::{EdgeSet, GraphSequence};
use crate::linalg::{Matrix, Vector};
use crate::localsolve::solve_local;
use crate::problem::CoupledProblem;
use crate::{Error, Result};

const STOCHASTIC_TOLERANCE: f64 = 1e-12;

/// Symmetric doubly stochastic weights on the undirected version of `edges`:
/// `M_ij = 1/(1 + max(deg_i, deg_j))` for neighbors, the remainder on the diagonal.
pub fn metropolis_weights(edges: &EdgeSet, m: usize) -> Matrix {
    let mut adjacent = vec![vec![false; m]; m];
    for &(i, j) in edges {
        adjacent[i][j] = true;
        adjacent[j][i] = true;
    }
    let degree: Vec<usize> = adjacent.iter().map(|row| row.iter().filter(|&&a| a).count()).collect();
    let mut w = Matrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            if adjacent[i][j] {
                w[(i, j)] = 1.0 / (1 + degree[i].max(degree[j])) as f64;
            }
        }
    }
    for i in 0..m {
        w[(i, i)] = 1.0 - w.row(i).sum();
    }
    w
}

pub fn is_doubly_stochastic(w: &Matrix) -> bool {
    w.is_square()
        && w.iter().all(|&v| v >= 0.0)
        && w.row_iter().all(|r| (r.sum() - 1.0).abs() <= STOCHASTIC_TOLERANCE)
        && w.column_iter().all(|c| (c.sum() - 1.0).abs() <= STOCHASTIC_TOLERANCE)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CddaState {
    t: usize,
    q: f64,
    lambda: Vec<Vector>,
    x: Vec<Vector>,
    ergodic: ErgodicSum,
}

impl CddaState {
    pub fn init(problem: &CoupledProblem, q: f64) -> Self {
        Self {
            t: 0,
            q,
            lambda: vec![Vector::zeros(problem.p()); problem.m()],
            x: problem.agents().iter().map(|a| Vector::zeros(a.dim())).collect(),
            ergodic: ErgodicSum::zeros(problem),
        }
    }

    pub fn t(&self) -> usize {
        self.t
    }
    pub fn lambda(&self) -> &[Vector] {
        &self.lambda
    }
    pub fn x(&self) -> &[Vector] {
        &self.x
    }
}

/// One baseline round with an explicit mixing matrix.
pub fn cdda_advance_round(state: &CddaState, problem: &CoupledProblem, mixing: &Matrix) -> Result<CddaState> {
    let m = problem.m();
    if mixing.shape() != (m, m) || !is_doubly_stochastic(mixing) {
        return Err(Error::InvalidInput("mixing matrix is not doubly stochastic".into()));
    }
    let t_next = state.t + 1;
    let beta = state.q / t_next as f64;
    let mut lambda = Vec::with_capacity(m);
    let mut x = Vec::with_capacity(m);
    for (i, agent) in problem.agents().iter().enumerate() {
        let mut mixed = Vector::zeros(problem.p());
        for (j, l) in state.lambda.iter().enumerate() {
            mixed.axpy(mixing[(i, j)], l, 1.0);
        }
        let x_i = solve_local(agent, &mixed)?;
        lambda.push(mixed + agent.residual(&x_i) * beta);
        x.push(x_i);
    }
    let mut ergodic = state.ergodic.clone();
    ergodic.accumulate(t_next, &x);
    Ok(CddaState {
        t: t_next,
        q: state.q,
        lambda,
        x,
        ergodic,
    })
}

impl DualMethod for CddaState {
    fn round(&self) -> usize {
        self.t
    }
    fn lambdas(&self) -> &[Vector] {
        &self.lambda
    }
    fn xs(&self) -> &[Vector] {
        &self.x
    }
    fn ergodic(&self) -> &ErgodicSum {
        &self.ergodic
    }
    fn step_size(&self) -> f64 {
        if self.t == 0 {
            0.0
        } else {
            self.q / self.t as f64
        }
    }
    fn advance(&self, problem: &CoupledProblem, seq: &GraphSequence) -> Result<Self> {
        let mixing = metropolis_weights(seq.edges(self.t), problem.m());
        cdda_advance_round(self, problem, &mixing)
    }
}

/// Runs the baseline with the same step schedule and stopping rules as DRDGA.
pub fn run_cdda(
    problem: &CoupledProblem,
    seq: &GraphSequence,
    config: &RunConfig,
    f_star: Option<f64>,
) -> Result<RunOutcome<CddaState>> {
    if seq.m() != problem.m() {
        return Err(Error::InvalidInput(format!(
            "graph has {} agents, problem has {}",
            seq.m(),
            problem.m()
        )));
    }
    config.validate(problem)?;
    drive(
        CddaState::init(problem, config.q),
        problem,
        seq,
        config.t_max,
        config.epsilon,
        f_star,
    )
}
