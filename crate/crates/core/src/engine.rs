//! Synchronous DRDGA rounds.
//!
//! Per round `t → t+1`, with `W = W[t]`:
//!
//! ```text
//! u_i   = Σ_j W_ij θ_j          ρ_i = Σ_j W_ij ρ_j          λ_i = u_i / ρ_i
//! x_i   = argmin_{X_i} f_i(x) + λ_iᵀ(A_i x − b_i)
//! θ_i   = u_i + (q/(t+1)) (A_i x_i − b_i − γ_i λ_i)
//! ```
//!
//! Mixing reads only the round-`t` snapshot; the local solves and dual steps
//! are independent per agent.

use crate::graph::GraphSequence;
use crate::linalg::{max_pairwise_distance, Vector};
use crate::localsolve::solve_local;
use crate::metrics::{observe, MetricsRow};
use crate::problem::CoupledProblem;
use crate::{Error, Result};

/// Lower limit on `q·γ/m` for the rate guarantees.
pub const MIN_STEP_PRODUCT: f64 = 4.0;

/// Below this magnitude an objective value is treated as zero in the
/// relative-change stopping test.
pub const RELATIVE_CHANGE_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Step-size numerator: `β[t] = q/t`.
    pub q: f64,
    pub t_max: usize,
    pub epsilon: f64,
    /// Initial `θ_i[0]`; zeros when `None`.
    pub theta0: Option<Vec<Vector>>,
}

impl RunConfig {
    pub fn new(q: f64, t_max: usize, epsilon: f64) -> Self {
        Self {
            q,
            t_max,
            epsilon,
            theta0: None,
        }
    }

    /// Smallest `q` with `q·γ/m ≥ 4`.
    pub fn min_q(problem: &CoupledProblem) -> f64 {
        MIN_STEP_PRODUCT * problem.m() as f64 / problem.gamma_total()
    }

    pub fn validate(&self, problem: &CoupledProblem) -> Result<()> {
        let min_q = Self::min_q(problem);
        if !(self.q.is_finite()
            && self.q * problem.gamma_total() / problem.m() as f64 >= MIN_STEP_PRODUCT * (1.0 - 1e-12))
        {
            return Err(Error::config(
                "run.q",
                format!("q·γ/m must be at least 4, got q = {}; minimum q = {min_q}", self.q),
            ));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::config(
                "run.epsilon",
                format!("must be positive, got {}", self.epsilon),
            ));
        }
        if self.t_max < 2 {
            return Err(Error::config(
                "run.t_max",
                format!("must be at least 2, got {}", self.t_max),
            ));
        }
        if let Some(theta0) = &self.theta0 {
            if theta0.len() != problem.m() || theta0.iter().any(|v| v.len() != problem.p()) {
                return Err(Error::config(
                    "run.theta0",
                    format!("expected {} vectors of length {}", problem.m(), problem.p()),
                ));
            }
        }
        Ok(())
    }

    pub fn theta0_l1(&self) -> f64 {
        self.theta0
            .as_ref()
            .map_or(0.0, |t| t.iter().map(|v| v.iter().map(|c| c.abs()).sum::<f64>()).sum())
    }
}

/// Running numerators `Σ_{s≤t} (s−1) x_i[s]` of the ergodic average.
#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicSum {
    sums: Vec<Vector>,
}

impl ErgodicSum {
    pub fn zeros(problem: &CoupledProblem) -> Self {
        Self {
            sums: problem.agents().iter().map(|a| Vector::zeros(a.dim())).collect(),
        }
    }

    /// Adds round `t`'s iterates with weight `t − 1`.
    pub fn accumulate(&mut self, t: usize, xs: &[Vector]) {
        let w = t.saturating_sub(1) as f64;
        for (s, x) in self.sums.iter_mut().zip(xs) {
            s.axpy(w, x, 1.0);
        }
    }

    pub fn sums(&self) -> &[Vector] {
        &self.sums
    }

    /// `x̂_i[T] = Σ_{t=1}^T (t−1) x_i[t] / (T(T−1)/2)`.
    pub fn average(&self, rounds: usize) -> Result<Vec<Vector>> {
        if rounds < 2 {
            return Err(Error::UndefinedAverage(rounds));
        }
        let denom = (rounds * (rounds - 1)) as f64 / 2.0;
        Ok(self.sums.iter().map(|s| s / denom).collect())
    }
}

/// Common surface of round-based dual methods, used by [`drive`].
pub trait DualMethod: Sized {
    fn round(&self) -> usize;
    fn lambdas(&self) -> &[Vector];
    fn xs(&self) -> &[Vector];
    fn ergodic(&self) -> &ErgodicSum;
    /// Step size used to produce the current round's iterate.
    fn step_size(&self) -> f64;
    fn advance(&self, problem: &CoupledProblem, seq: &GraphSequence) -> Result<Self>;

    fn ergodic_average(&self) -> Result<Vec<Vector>> {
        self.ergodic().average(self.round())
    }

    /// `max_{i,j} ‖λ_i − λ_j‖`.
    fn disagreement(&self) -> f64 {
        max_pairwise_distance(self.lambdas())
    }

    fn max_lambda_norm(&self) -> f64 {
        self.lambdas().iter().map(|l| l.norm()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunState {
    t: usize,
    theta: Vec<Vector>,
    rho: Vec<f64>,
    u: Vec<Vector>,
    lambda: Vec<Vector>,
    x: Vec<Vector>,
    ergodic: ErgodicSum,
    config: RunConfig,
}

impl RunState {
    /// Round-0 state: `θ_i = θ_i[0]`, `ρ_i = 1`, everything else zero.
    pub fn init(problem: &CoupledProblem, config: &RunConfig) -> Result<Self> {
        config.validate(problem)?;
        let (m, p) = (problem.m(), problem.p());
        let theta = config.theta0.clone().unwrap_or_else(|| vec![Vector::zeros(p); m]);
        Ok(Self {
            t: 0,
            theta,
            rho: vec![1.0; m],
            u: vec![Vector::zeros(p); m],
            lambda: vec![Vector::zeros(p); m],
            x: problem.agents().iter().map(|a| Vector::zeros(a.dim())).collect(),
            ergodic: ErgodicSum::zeros(problem),
            config: config.clone(),
        })
    }

    pub fn t(&self) -> usize {
        self.t
    }
    pub fn theta(&self) -> &[Vector] {
        &self.theta
    }
    pub fn rho(&self) -> &[f64] {
        &self.rho
    }
    pub fn u(&self) -> &[Vector] {
        &self.u
    }
    pub fn lambda(&self) -> &[Vector] {
        &self.lambda
    }
    pub fn x(&self) -> &[Vector] {
        &self.x
    }
    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    /// `θ̄[t] = (1/m) Σ_i θ_i[t]`.
    pub fn theta_bar(&self) -> Vector {
        crate::linalg::mean(&self.theta)
    }

    /// One synchronous round of the algorithm.
    pub fn advance_round(&self, problem: &CoupledProblem, seq: &GraphSequence) -> Result<Self> {
        let w = seq.weight_matrix(self.t);
        let t_next = self.t + 1;
        let beta = self.config.q / t_next as f64;

        let u = w.mix(&self.theta);
        let rho = w.mix_scalars(&self.rho);
        if let Some(i) = rho.iter().position(|&r| !(r > 0.0)) {
            return Err(Error::Invariant(format!(
                "push-sum weight of agent {} is {}",
                i + 1,
                rho[i]
            )));
        }
        let lambda: Vec<Vector> = u.iter().zip(&rho).map(|(u, r)| u / *r).collect();

        let mut x = Vec::with_capacity(problem.m());
        let mut theta = Vec::with_capacity(problem.m());
        for ((agent, u_i), lambda_i) in problem.agents().iter().zip(&u).zip(&lambda) {
            let x_i = solve_local(agent, lambda_i)?;
            let grad = agent.residual(&x_i) - lambda_i * agent.gamma();
            theta.push(u_i + grad * beta);
            x.push(x_i);
        }

        let mut ergodic = self.ergodic.clone();
        ergodic.accumulate(t_next, &x);
        Ok(Self {
            t: t_next,
            theta,
            rho,
            u,
            lambda,
            x,
            ergodic,
            config: self.config.clone(),
        })
    }
}

impl DualMethod for RunState {
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
            self.config.q / self.t as f64
        }
    }
    fn advance(&self, problem: &CoupledProblem, seq: &GraphSequence) -> Result<Self> {
        self.advance_round(problem, seq)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    TMax,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::TMax => "t_max",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome<S> {
    pub state: S,
    pub rows: Vec<MetricsRow>,
    pub stop_reason: StopReason,
}

/// The three termination tests between consecutive rounds: multiplier change,
/// coupling violation of the new iterate and relative objective change.
pub fn stopping_criteria_met<S: DualMethod>(prev: &S, next: &S, problem: &CoupledProblem, epsilon: f64) -> bool {
    let dual_change = prev
        .lambdas()
        .iter()
        .zip(next.lambdas())
        .map(|(a, b)| (a - b).amax())
        .fold(0.0, f64::max);
    if !(dual_change <= epsilon) {
        return false;
    }
    if !(problem.coupling_residual(next.xs()).norm() <= epsilon) {
        return false;
    }
    problem
        .agents()
        .iter()
        .zip(prev.xs().iter().zip(next.xs()))
        .all(|(agent, (x_old, x_new))| {
            let old = agent.value(x_old);
            let ratio = if old.abs() < RELATIVE_CHANGE_GUARD {
                0.0
            } else {
                ((agent.value(x_new) - old) / old).abs()
            };
            ratio <= epsilon
        })
}

/// Advances `initial` until the stopping criteria hold or `t_max` rounds are done,
/// recording one metrics row per round.
pub fn drive<S: DualMethod>(
    initial: S,
    problem: &CoupledProblem,
    seq: &GraphSequence,
    t_max: usize,
    epsilon: f64,
    f_star: Option<f64>,
) -> Result<RunOutcome<S>> {
    let mut state = initial;
    let mut rows = Vec::new();
    while state.round() < t_max {
        let next = state.advance(problem, seq)?;
        rows.push(observe(&next, problem, f_star)?);
        let done = stopping_criteria_met(&state, &next, problem, epsilon);
        state = next;
        if done {
            return Ok(RunOutcome {
                state,
                rows,
                stop_reason: StopReason::Converged,
            });
        }
    }
    Ok(RunOutcome {
        state,
        rows,
        stop_reason: StopReason::TMax,
    })
}

/// Runs DRDGA from [`RunState::init`].
pub fn run_until(
    problem: &CoupledProblem,
    seq: &GraphSequence,
    config: &RunConfig,
    f_star: Option<f64>,
) -> Result<RunOutcome<RunState>> {
    if seq.m() != problem.m() {
        return Err(Error::InvalidInput(format!(
            "graph has {} agents, problem has {}",
            seq.m(),
            problem.m()
        )));
    }
    let state = RunState::init(problem, config)?;
    drive(state, problem, seq, config.t_max, config.epsilon, f_star)
}
