//! Per-round observables, the rate-bound evaluators and rate fitting.

use crate::engine::{DualMethod, RunState};
use crate::linalg::Vector;
use crate::problem::CoupledProblem;
use crate::{Error, Result};

/// One round's observables. `objective`, `gap` and `violation` are taken on
/// the ergodic average `x̂[t]` (on `x[1]` in the first round, where the
/// average is undefined); `violation_inst` uses the instantaneous `x[t]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub t: usize,
    pub objective: f64,
    /// `F(x̂[t]) − F*`; NaN without a reference value.
    pub gap: f64,
    pub violation: f64,
    pub violation_inst: f64,
    pub disagreement: f64,
    pub max_lambda: f64,
    pub beta: f64,
}

pub const CSV_HEADER: &str = "t,objective,gap,violation,violation_inst,disagreement,max_lambda,beta";

impl MetricsRow {
    /// CSV line with every float in 12 significant digits.
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.t,
            fmt_float(self.objective),
            fmt_float(self.gap),
            fmt_float(self.violation),
            fmt_float(self.violation_inst),
            fmt_float(self.disagreement),
            fmt_float(self.max_lambda),
            fmt_float(self.beta),
        )
    }
}

/// `{:.11e}`: one leading digit plus eleven decimals.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.11e}")
}

pub fn observe<S: DualMethod>(state: &S, problem: &CoupledProblem, f_star: Option<f64>) -> Result<MetricsRow> {
    let xs = state.xs();
    let avg = if state.round() >= 2 {
        state.ergodic_average()?
    } else {
        xs.to_vec()
    };
    let objective = problem.objective(&avg);
    Ok(MetricsRow {
        t: state.round(),
        objective,
        gap: f_star.map_or(f64::NAN, |f| objective - f),
        violation: problem.coupling_residual(&avg).norm(),
        violation_inst: problem.coupling_residual(xs).norm(),
        disagreement: state.disagreement(),
        max_lambda: state.max_lambda_norm(),
        beta: state.step_size(),
    })
}

/// Largest `max_i ‖λ_i‖` seen over the recorded rounds.
pub fn empirical_dual_bound(rows: &[MetricsRow]) -> f64 {
    rows.iter().map(|r| r.max_lambda).fold(0.0, f64::max)
}

/// Constants entering the convergence-rate and violation bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundConstants {
    /// Dual-norm bound (empirical running max).
    pub d: f64,
    /// `G_i` per agent.
    pub g: Vec<f64>,
    pub gammas: Vec<f64>,
    pub gamma_total: f64,
    /// `max_i √p (G_i + γ_i D)`.
    pub b_grad: f64,
    /// `m^(−m·B_window)`.
    pub delta: f64,
    /// `(1 − δ)^(1/(m·B_window))`.
    pub eta: f64,
    /// `1 − η`, kept separately: it underflows to 0 in `1.0 - eta` once δ < 1e-16.
    pub one_minus_eta: f64,
    pub q: f64,
    pub m: usize,
    /// Coupling dimension.
    pub p: usize,
    pub theta0_l1: f64,
}

fn gradient_bound(g: &[f64], gammas: &[f64], p: usize, d: f64) -> f64 {
    g.iter()
        .zip(gammas)
        .map(|(gi, yi)| (p as f64).sqrt() * (gi + yi * d))
        .fold(0.0, f64::max)
}

impl BoundConstants {
    pub fn from_parts(g: Vec<f64>, gammas: Vec<f64>, p: usize, d: f64, q: f64, window: usize, theta0_l1: f64) -> Self {
        let m = g.len();
        let exponent = (m * window) as f64;
        let delta = (-exponent * (m as f64).ln()).exp();
        let log_eta = (-delta).ln_1p() / exponent;
        let b_grad = gradient_bound(&g, &gammas, p, d);
        Self {
            d,
            gamma_total: gammas.iter().sum(),
            g,
            gammas,
            b_grad,
            delta,
            eta: log_eta.exp(),
            one_minus_eta: -log_eta.exp_m1(),
            q,
            m,
            p,
            theta0_l1,
        }
    }

    pub fn new(problem: &CoupledProblem, q: f64, window: usize, theta0_l1: f64, d: f64) -> Self {
        Self::from_parts(
            problem.g_bounds(),
            problem.agents().iter().map(|a| a.gamma()).collect(),
            problem.p(),
            d,
            q,
            window,
            theta0_l1,
        )
    }

    /// Same constants with a different dual bound.
    pub fn with_d(&self, d: f64) -> Self {
        let mut out = self.clone();
        out.d = d;
        out.b_grad = gradient_bound(&self.g, &self.gammas, self.p, d);
        out
    }

    fn spread_terms(&self) -> impl Iterator<Item = f64> + '_ {
        self.g.iter().zip(&self.gammas).map(move |(gi, yi)| gi + yi * self.d)
    }

    /// `Σ_i (G_i + γ_i D)` and `Σ_i (G_i + γ_i D)²`.
    fn sums(&self) -> (f64, f64) {
        self.spread_terms().fold((0.0, 0.0), |(s1, s2), v| (s1 + v, s2 + v * v))
    }
}

/// Right-hand side of the objective-gap bound at round `rounds`:
///
/// ```text
/// 32/(Tδ) Σ(G_i+γ_i D) [ η/(1−η) Σ‖θ_i[0]‖₁ + q m B/(1−η) (1 + ln T) ] + q/T Σ(G_i+γ_i D)²
/// ```
pub fn theorem2_bound(rounds: usize, c: &BoundConstants) -> f64 {
    let t = rounds as f64;
    let (s1, s2) = c.sums();
    let bracket =
        c.eta / c.one_minus_eta * c.theta0_l1 + c.q * c.m as f64 * c.b_grad / c.one_minus_eta * (1.0 + t.ln());
    32.0 / (t * c.delta) * s1 * bracket + c.q / t * s2
}

/// Right-hand side of the squared-violation bound at round `rounds`:
///
/// ```text
/// γ/(Tδ) Σ(G_j+γ_j D) [ 8η/(1−η) Σ‖θ_j[0]‖₁ + 8 q m B/(1−η) (1 + ln T) ] + qγ/(4T) Σ(G_j+γ_j D)²
/// ```
pub fn theorem3_bound(rounds: usize, c: &BoundConstants) -> f64 {
    let t = rounds as f64;
    let (s1, s2) = c.sums();
    let bracket = 8.0 * c.eta / c.one_minus_eta * c.theta0_l1
        + 8.0 * c.q * c.m as f64 * c.b_grad / c.one_minus_eta * (1.0 + t.ln());
    c.gamma_total / (t * c.delta) * s1 * bracket + c.q * c.gamma_total / (4.0 * t) * s2
}

fn regularized_lagrangian(problem: &CoupledProblem, xs: &[Vector], lambda: &Vector) -> f64 {
    problem
        .agents()
        .iter()
        .zip(xs)
        .map(|(a, x)| a.value(x) + lambda.dot(&a.residual(x)) - 0.5 * a.gamma() * lambda.norm_squared())
        .sum()
}

/// RHS − LHS of the one-step descent inequality on `θ̄`
///
/// ```text
/// ‖θ̄[t+1] − λ‖² ≤ ‖θ̄[t] − λ‖² + 4β/m Σ(G_j+γ_j D)‖λ_j[t+1] − θ̄[t]‖ − β/m Σγ_j‖λ_j[t+1] − λ‖²
///                 + β²/m Σ(G_j+γ_j D)² − 2β/m (L(x[t+1], λ) − L(x, θ̄[t]))
/// ```
///
/// with `β = β[t+1]`, `x = x[t+1]` and `λ = probe`. Non-negative whenever
/// `c.d` bounds every multiplier norm up to round `t+1`.
pub fn lemma2_residual(
    prev: &RunState,
    next: &RunState,
    problem: &CoupledProblem,
    probe: &Vector,
    c: &BoundConstants,
) -> f64 {
    let m = problem.m() as f64;
    let beta = next.config().q / next.t() as f64;
    let bar_prev = prev.theta_bar();
    let bar_next = next.theta_bar();
    let lhs = (&bar_next - probe).norm_squared();

    let mut spread = 0.0;
    let mut pull = 0.0;
    for ((lambda_j, agent), (g_j, y_j)) in next
        .lambda()
        .iter()
        .zip(problem.agents())
        .zip(c.g.iter().zip(&c.gammas))
    {
        spread += (g_j + y_j * c.d) * (lambda_j - &bar_prev).norm();
        pull += agent.gamma() * (lambda_j - probe).norm_squared();
    }
    let (_, s2) = c.sums();
    let lagrangian_gap =
        regularized_lagrangian(problem, next.x(), probe) - regularized_lagrangian(problem, next.x(), &bar_prev);

    let rhs = (&bar_prev - probe).norm_squared() + 4.0 * beta / m * spread - beta / m * pull + beta * beta / m * s2
        - 2.0 * beta / m * lagrangian_gap;
    rhs - lhs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateTarget {
    Gap,
    ViolationSquared,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    /// Median of `value·T/ln T` over the last half of the retained rows.
    pub c_hat: f64,
    /// `max g(T) / g(T₀)` over the retained rows.
    pub max_ratio: f64,
}

/// Minimum round and row count for [`rate_fit`].
pub const RATE_FIT_MIN_ROUND: usize = 10;
pub const RATE_FIT_MIN_ROWS: usize = 10;

/// Tests the `O(ln T / T)` law by tracking `g(T) = value(T)·T/ln T` over
/// rows with `T ≥ 10`.
pub fn rate_fit(rows: &[MetricsRow], which: RateTarget) -> Result<RateFit> {
    let g: Vec<f64> = rows
        .iter()
        .filter(|r| r.t >= RATE_FIT_MIN_ROUND)
        .map(|r| {
            let t = r.t as f64;
            let value = match which {
                RateTarget::Gap => r.gap,
                RateTarget::ViolationSquared => r.violation * r.violation,
            };
            value * t / t.ln()
        })
        .collect();
    if g.len() < RATE_FIT_MIN_ROWS {
        return Err(Error::InvalidInput(format!(
            "rate fit needs {RATE_FIT_MIN_ROWS} rows with T >= {RATE_FIT_MIN_ROUND}, got {}",
            g.len()
        )));
    }
    let mut tail = g[g.len() / 2..].to_vec();
    tail.sort_by(f64::total_cmp);
    let mid = tail.len() / 2;
    let c_hat = if tail.len() % 2 == 1 {
        tail[mid]
    } else {
        0.5 * (tail[mid - 1] + tail[mid])
    };
    let max_g = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(RateFit {
        c_hat,
        max_ratio: max_g / g[0],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::RunConfig;
    use crate::graph::generate_graph_sequence;
    use crate::problem::make_quadratic_problem;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn row(t: usize, gap: f64) -> MetricsRow {
        MetricsRow {
            t,
            objective: 0.0,
            gap,
            violation: gap.abs().sqrt(),
            violation_inst: 0.0,
            disagreement: 0.0,
            max_lambda: 0.0,
            beta: 0.0,
        }
    }

    #[test]
    fn rate_fit_on_exact_law() {
        let rows: Vec<_> = (10..200).map(|t| row(t, (t as f64).ln() / t as f64)).collect();
        let fit = rate_fit(&rows, RateTarget::Gap).unwrap();
        assert!((fit.c_hat - 1.0).abs() <= 1e-9);
        assert!((fit.max_ratio - 1.0).abs() <= 1e-9);
        let fit = rate_fit(&rows, RateTarget::ViolationSquared).unwrap();
        assert!((fit.c_hat - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn rate_fit_on_faster_decay() {
        let rows: Vec<_> = (10..200).map(|t| row(t, 1.0 / t as f64)).collect();
        let fit = rate_fit(&rows, RateTarget::Gap).unwrap();
        assert_eq!(fit.max_ratio, 1.0);
    }

    #[test]
    fn rate_fit_needs_rows() {
        let rows: Vec<_> = (1..15).map(|t| row(t, 1.0)).collect();
        assert!(rate_fit(&rows, RateTarget::Gap).is_err());
    }

    #[test]
    fn csv_formatting() {
        assert_eq!(fmt_float(1.0), "1.00000000000e0");
        assert_eq!(fmt_float(-0.000123456789012345), "-1.23456789012e-4");
        assert_eq!(row(3, 0.25).to_csv().split(',').count(), 8);
    }

    fn constants(theta0_l1: f64) -> BoundConstants {
        BoundConstants::from_parts(vec![1.0, 0.5, 2.0], vec![1.0, 1.0, 1.0], 2, 3.0, 4.0, 1, theta0_l1)
    }

    #[test]
    fn bound_constants_are_admissible() {
        let c = constants(0.0);
        assert!(c.delta > 0.0 && c.eta > 0.0 && c.eta < 1.0);
        assert_relative_eq!(c.delta, 3f64.powi(-3), epsilon = 1e-15);
        assert_relative_eq!(c.eta + c.one_minus_eta, 1.0, epsilon = 1e-15);
        assert!(c.b_grad >= 2f64.sqrt() * 2.0);
        let tiny = BoundConstants::from_parts(vec![1.0; 20], vec![1.0; 20], 1, 1.0, 4.0, 3, 0.0);
        assert!(tiny.one_minus_eta > 0.0 && tiny.one_minus_eta.is_finite());
    }

    #[test]
    fn zero_start_drops_the_initial_term() {
        let zero = constants(0.0);
        let t = 50;
        let (s1, s2) = zero.sums();
        let expect = 32.0 / (t as f64 * zero.delta) * s1 * zero.q * 3.0 * zero.b_grad / zero.one_minus_eta
            * (1.0 + (t as f64).ln())
            + zero.q / t as f64 * s2;
        assert_relative_eq!(theorem2_bound(t, &zero), expect, max_relative = 1e-14);
        assert!(theorem2_bound(t, &constants(2.0)) > theorem2_bound(t, &zero));
    }

    #[test]
    fn bounds_decrease_and_stay_positive() {
        let c = constants(1.0);
        for t in 8..400 {
            assert!(theorem2_bound(2 * t, &c) < theorem2_bound(t, &c));
            assert!(theorem3_bound(2 * t, &c) < theorem3_bound(t, &c));
        }
        for t in 1..100 {
            assert!(theorem3_bound(t, &c) > 0.0);
        }
    }

    #[test]
    fn with_d_matches_fresh_constants() {
        let c = constants(0.5);
        let fresh = BoundConstants::from_parts(vec![1.0, 0.5, 2.0], vec![1.0, 1.0, 1.0], 2, 7.0, 4.0, 1, 0.5);
        assert_eq!(c.with_d(7.0), fresh);
    }

    fn lemma_run(rounds: usize) -> (CoupledProblem, Vec<RunState>) {
        let problem = make_quadratic_problem(4, 2, &[2, 1, 2, 1], 21, 0.5).unwrap();
        let seq = generate_graph_sequence(4, 2, 21);
        let mut states = vec![RunState::init(&problem, &RunConfig::new(4.0, rounds + 1, 1e-9)).unwrap()];
        for _ in 0..rounds {
            let next = states.last().unwrap().advance_round(&problem, &seq).unwrap();
            states.push(next);
        }
        (problem, states)
    }

    #[test]
    fn lemma2_holds_and_is_monotone_in_d() {
        let (problem, states) = lemma_run(10);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut d: f64 = 0.0;
        for pair in states.windows(2) {
            d = pair[1].lambda().iter().map(|l| l.norm()).fold(d, f64::max);
            let c = BoundConstants::new(&problem, 4.0, 2, 0.0, d);
            let loose = c.with_d(10.0 * d);
            for _ in 0..20 {
                let dir = Vector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0));
                let probe = dir.normalize() * (d * rng.gen_range(0.0..1.0));
                let r = lemma2_residual(&pair[0], &pair[1], &problem, &probe, &c);
                assert!(r >= -1e-8, "residual {r}");
                assert!(lemma2_residual(&pair[0], &pair[1], &problem, &probe, &loose) >= r);
            }
        }
    }

    #[test]
    fn lemma2_single_agent_zero_probe() {
        let problem = make_quadratic_problem(1, 2, &[2], 3, 1.0).unwrap();
        let seq = generate_graph_sequence(1, 1, 0);
        let mut state = RunState::init(&problem, &RunConfig::new(4.0, 30, 1e-9)).unwrap();
        let mut d: f64 = 0.0;
        for _ in 0..20 {
            let next = state.advance_round(&problem, &seq).unwrap();
            d = d.max(next.lambda()[0].norm());
            let c = BoundConstants::new(&problem, 4.0, 1, 0.0, d);
            assert!(lemma2_residual(&state, &next, &problem, &Vector::zeros(2), &c) >= -1e-9);
            state = next;
        }
    }
}
