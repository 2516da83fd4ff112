//! The coupled problem
//!
//! ```text
//! min Σ_i f_i(x_i)   s.t.  x_i ∈ [lower_i, upper_i],   Σ_i (A_i x_i − b_i) = 0
//! ```
//!
//! with every `f_i` strongly convex, plus constructors for the network utility
//! maximization (NUM) instances and a synthetic quadratic family.

use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{Matrix, Vector};
use crate::{Error, Result};

/// Scale of the NUM utility `U(x) = 20 w log(x + 0.1)`.
pub const NUM_UTILITY_SCALE: f64 = 20.0;
/// Offset inside the NUM logarithm.
pub const NUM_RATE_OFFSET: f64 = 0.1;

/// Vertex enumeration for `G_i` is used up to this many coordinates.
const MAX_ENUMERATED_DIM: usize = 20;

/// A strongly convex objective supplied through value and gradient oracles.
pub trait SmoothObjective: Send + Sync {
    fn value(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;
    /// Strong-convexity modulus.
    fn modulus(&self) -> f64;
    /// Lipschitz constant of the gradient.
    fn lipschitz(&self) -> f64;
}

#[derive(Clone)]
pub enum ObjectiveSpec {
    /// `½ Σ d_k x_k² + Σ c_k x_k`.
    DiagonalQuadratic {
        diag: Vector,
        lin: Vector,
    },
    /// NUM disutility `−20 w log(x + 0.1)` of a scalar rate.
    LogUtility {
        weight: f64,
    },
    GeneralSmooth(Arc<dyn SmoothObjective>),
}

impl fmt::Debug for ObjectiveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DiagonalQuadratic { diag, lin } => f
                .debug_struct("DiagonalQuadratic")
                .field("diag", &diag.as_slice())
                .field("lin", &lin.as_slice())
                .finish(),
            Self::LogUtility { weight } => f.debug_struct("LogUtility").field("weight", weight).finish(),
            Self::GeneralSmooth(obj) => f
                .debug_struct("GeneralSmooth")
                .field("modulus", &obj.modulus())
                .field("lipschitz", &obj.lipschitz())
                .finish(),
        }
    }
}

impl ObjectiveSpec {
    pub fn value(&self, x: &Vector) -> f64 {
        match self {
            Self::DiagonalQuadratic { diag, lin } => {
                0.5 * diag.iter().zip(x.iter()).map(|(d, v)| d * v * v).sum::<f64>() + lin.dot(x)
            }
            Self::LogUtility { weight } => -NUM_UTILITY_SCALE * weight * (x[0] + NUM_RATE_OFFSET).ln(),
            Self::GeneralSmooth(obj) => obj.value(x),
        }
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        match self {
            Self::DiagonalQuadratic { diag, lin } => diag.component_mul(x) + lin,
            Self::LogUtility { weight } => {
                Vector::from_element(1, -NUM_UTILITY_SCALE * weight / (x[0] + NUM_RATE_OFFSET))
            }
            Self::GeneralSmooth(obj) => obj.gradient(x),
        }
    }
}

/// One agent's share of the coupled problem.
#[derive(Debug, Clone)]
pub struct AgentProblem {
    objective: ObjectiveSpec,
    lower: Vector,
    upper: Vector,
    a: Matrix,
    b: Vector,
    tau: f64,
    gamma: f64,
}

impl AgentProblem {
    pub fn new(
        objective: ObjectiveSpec,
        lower: Vector,
        upper: Vector,
        a: Matrix,
        b: Vector,
        tau: f64,
        gamma: f64,
    ) -> Result<Self> {
        let n = lower.len();
        let bad = |msg: String| Err(Error::InvalidProblem(msg));
        if n == 0 || upper.len() != n {
            return bad(format!("box bounds have lengths {} and {}", n, upper.len()));
        }
        if lower
            .iter()
            .zip(upper.iter())
            .any(|(l, u)| !(l <= u) || !l.is_finite() || !u.is_finite())
        {
            return bad("box bounds must be finite with lower <= upper".into());
        }
        if a.ncols() != n || a.nrows() != b.len() {
            return bad(format!(
                "coupling matrix is {}x{}, expected {}x{}",
                a.nrows(),
                a.ncols(),
                b.len(),
                n
            ));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return bad(format!("strong-convexity modulus must be positive, got {tau}"));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return bad(format!("regularization weight must be positive, got {gamma}"));
        }
        match &objective {
            ObjectiveSpec::DiagonalQuadratic { diag, lin } => {
                if diag.len() != n || lin.len() != n {
                    return bad("quadratic coefficients do not match the box dimension".into());
                }
                if diag.min() < tau {
                    return bad(format!("min diagonal {} is below modulus {tau}", diag.min()));
                }
            }
            ObjectiveSpec::LogUtility { weight } => {
                if n != 1 {
                    return bad("log utility is defined for scalar agents only".into());
                }
                if lower[0] < 0.0 {
                    return bad("log utility needs lower bound >= 0".into());
                }
                if !(*weight >= 0.0) {
                    return bad(format!("utility weight must be non-negative, got {weight}"));
                }
                let min_curvature = NUM_UTILITY_SCALE * weight / (upper[0] + NUM_RATE_OFFSET).powi(2);
                if tau > min_curvature * (1.0 + 1e-12) {
                    return bad(format!("modulus {tau} exceeds the utility's curvature {min_curvature}"));
                }
            }
            ObjectiveSpec::GeneralSmooth(obj) => {
                if tau > obj.modulus() || !(obj.lipschitz() >= obj.modulus()) {
                    return bad("general objective needs tau <= modulus <= lipschitz".into());
                }
            }
        }
        Ok(Self {
            objective,
            lower,
            upper,
            a,
            b,
            tau,
            gamma,
        })
    }

    pub fn objective(&self) -> &ObjectiveSpec {
        &self.objective
    }
    pub fn lower(&self) -> &Vector {
        &self.lower
    }
    pub fn upper(&self) -> &Vector {
        &self.upper
    }
    pub fn a(&self) -> &Matrix {
        &self.a
    }
    pub fn b(&self) -> &Vector {
        &self.b
    }
    pub fn tau(&self) -> f64 {
        self.tau
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn dim(&self) -> usize {
        self.lower.len()
    }
    pub fn coupling_dim(&self) -> usize {
        self.b.len()
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "regularization weight must be positive, got {gamma}"
            )));
        }
        self.gamma = gamma;
        Ok(self)
    }

    pub fn value(&self, x: &Vector) -> f64 {
        self.objective.value(x)
    }

    /// `A_i x − b_i`.
    pub fn residual(&self, x: &Vector) -> Vector {
        &self.a * x - &self.b
    }

    pub fn contains(&self, x: &Vector) -> bool {
        x.len() == self.dim() && (0..x.len()).all(|k| self.lower[k] <= x[k] && x[k] <= self.upper[k])
    }

    pub fn project(&self, x: &Vector) -> Vector {
        Vector::from_iterator(
            x.len(),
            x.iter().enumerate().map(|(k, v)| v.clamp(self.lower[k], self.upper[k])),
        )
    }
}

/// Upper bound `G_i` on `‖A_i x − b_i‖` over the box.
///
/// The norm is convex, so its maximum over the box sits at a vertex; those are
/// enumerated for up to 20 coordinates. Larger agents fall back to
/// `‖A_i‖_F · ‖max(|lower|, |upper|)‖ + ‖b_i‖`.
pub fn compute_g_bound(agent: &AgentProblem) -> f64 {
    let n = agent.dim();
    if n <= MAX_ENUMERATED_DIM {
        let mut best = 0.0_f64;
        let mut vertex = agent.lower.clone();
        for mask in 0u32..(1u32 << n) {
            for k in 0..n {
                vertex[k] = if mask & (1 << k) != 0 {
                    agent.upper[k]
                } else {
                    agent.lower[k]
                };
            }
            best = best.max(agent.residual(&vertex).norm());
        }
        best
    } else {
        let radius = Vector::from_iterator(
            n,
            agent
                .lower
                .iter()
                .zip(agent.upper.iter())
                .map(|(l, u)| l.abs().max(u.abs())),
        );
        agent.a.norm() * radius.norm() + agent.b.norm()
    }
}

#[derive(Debug, Clone)]
pub struct CoupledProblem {
    agents: Vec<AgentProblem>,
    p: usize,
}

impl CoupledProblem {
    pub fn new(agents: Vec<AgentProblem>) -> Result<Self> {
        let p = agents
            .first()
            .ok_or_else(|| Error::InvalidProblem("need at least one agent".into()))?
            .coupling_dim();
        if p == 0 {
            return Err(Error::InvalidProblem("coupling dimension must be >= 1".into()));
        }
        if let Some(i) = agents.iter().position(|a| a.coupling_dim() != p) {
            return Err(Error::InvalidProblem(format!(
                "agent {} has {} coupling rows, expected {p}",
                i + 1,
                agents[i].coupling_dim()
            )));
        }
        Ok(Self { agents, p })
    }

    pub fn agents(&self) -> &[AgentProblem] {
        &self.agents
    }
    pub fn m(&self) -> usize {
        self.agents.len()
    }
    pub fn p(&self) -> usize {
        self.p
    }

    /// `γ = Σ_j γ_j`.
    pub fn gamma_total(&self) -> f64 {
        self.agents.iter().map(AgentProblem::gamma).sum()
    }

    /// Same problem with every `γ_i` replaced by `gamma`.
    pub fn with_uniform_gamma(self, gamma: f64) -> Result<Self> {
        let agents = self
            .agents
            .into_iter()
            .map(|a| a.with_gamma(gamma))
            .collect::<Result<Vec<_>>>()?;
        Self::new(agents)
    }

    /// `F(x) = Σ_i f_i(x_i)`.
    pub fn objective(&self, xs: &[Vector]) -> f64 {
        self.agents.iter().zip(xs).map(|(a, x)| a.value(x)).sum()
    }

    /// `Σ_i (A_i x_i − b_i)`.
    pub fn coupling_residual(&self, xs: &[Vector]) -> Vector {
        let mut acc = Vector::zeros(self.p);
        for (a, x) in self.agents.iter().zip(xs) {
            acc += a.residual(x);
        }
        acc
    }

    pub fn g_bounds(&self) -> Vec<f64> {
        self.agents.iter().map(compute_g_bound).collect()
    }
}

/// NUM instance from an `|L|×|S|` 0/1 routing matrix.
///
/// Source `s` becomes a scalar agent on `[0, 1]` with disutility weight
/// `w_s = |L(s)|/|L|`, coupling column `A_s = routing[:, s]` and an equal
/// capacity share `b_s = C/|S|`.
pub fn make_num_problem(routing: &Matrix, capacities: &Vector, gammas: &[f64]) -> Result<CoupledProblem> {
    let (links, sources) = routing.shape();
    if links == 0 || sources == 0 {
        return Err(Error::InvalidProblem("routing matrix is empty".into()));
    }
    if capacities.len() != links {
        return Err(Error::InvalidProblem(format!(
            "{} capacities for {links} links",
            capacities.len()
        )));
    }
    if gammas.len() != sources {
        return Err(Error::InvalidProblem(format!(
            "{} gammas for {sources} sources",
            gammas.len()
        )));
    }
    if routing.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::InvalidProblem("routing entries must be 0 or 1".into()));
    }
    if capacities.iter().any(|&c| !(c > 0.0)) {
        return Err(Error::InvalidProblem("capacities must be positive".into()));
    }
    let share = capacities / sources as f64;
    let mut agents = Vec::with_capacity(sources);
    for s in 0..sources {
        let column = routing.column(s).into_owned();
        let used = column.sum();
        if used == 0.0 {
            return Err(Error::InvalidProblem(format!("source {} uses no link", s + 1)));
        }
        let weight = used / links as f64;
        let tau = NUM_UTILITY_SCALE * weight / (1.0 + NUM_RATE_OFFSET).powi(2);
        agents.push(AgentProblem::new(
            ObjectiveSpec::LogUtility { weight },
            Vector::zeros(1),
            Vector::from_element(1, 1.0),
            Matrix::from_column_slice(links, 1, column.as_slice()),
            share.clone(),
            tau,
            gammas[s],
        )?);
    }
    CoupledProblem::new(agents)
}

/// Two links, three sources: link 1 carries sources 1 and 2, link 2 carries
/// all three. Unit capacities.
pub fn fig7_routing() -> (Matrix, Vector) {
    let routing = Matrix::from_row_slice(2, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 1.0]);
    (routing, Vector::from_element(2, 1.0))
}

/// Random `links × sources` routing in which every link carries exactly
/// `per_link` distinct sources and every source uses at least one link.
///
/// With unit capacities the point `x_s = 1/per_link` satisfies `Ax = C`.
pub fn random_routing(sources: usize, links: usize, per_link: usize, seed: u64) -> Result<Matrix> {
    if per_link == 0 || per_link > sources || links * per_link < sources {
        return Err(Error::InvalidInput(format!(
            "cannot route {sources} sources over {links} links with {per_link} sources per link"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut uncovered: Vec<usize> = (0..sources).collect();
    uncovered.shuffle(&mut rng);
    let mut routing = Matrix::zeros(links, sources);
    for l in 0..links {
        let mut chosen = 0;
        while chosen < per_link {
            let s = match uncovered.pop() {
                Some(s) => s,
                None => rng.gen_range(0..sources),
            };
            // uncovered sources are distinct, so only random draws can repeat
            if routing[(l, s)] == 0.0 {
                routing[(l, s)] = 1.0;
                chosen += 1;
            }
        }
    }
    Ok(routing)
}

/// Random NUM with unit capacities over [`random_routing`].
pub fn make_random_num_problem(
    sources: usize,
    links: usize,
    per_link: usize,
    seed: u64,
    gamma: f64,
) -> Result<CoupledProblem> {
    let routing = random_routing(sources, links, per_link, seed)?;
    make_num_problem(&routing, &Vector::from_element(links, 1.0), &vec![gamma; sources])
}

/// Random diagonal-quadratic instance together with the interior point used
/// to make the coupling feasible.
///
/// Diagonals are drawn from `[tau_min, 10·tau_min]`, linear terms put each
/// unconstrained minimizer in `[−1.5, 1.5]`, boxes are `[−1, 1]`, coupling
/// entries are in `[−1, 1]` and `b_i = A_i x0_i`. Every `γ_i` is 1.
pub fn make_quadratic_instance(
    m: usize,
    p: usize,
    dims: &[usize],
    seed: u64,
    tau_min: f64,
) -> Result<(CoupledProblem, Vec<Vector>)> {
    if m == 0 || p == 0 {
        return Err(Error::InvalidInput("quadratic family needs m >= 1 and p >= 1".into()));
    }
    if dims.len() != m || dims.contains(&0) {
        return Err(Error::InvalidInput(format!(
            "need {m} positive dimensions, got {dims:?}"
        )));
    }
    if !(tau_min > 0.0 && tau_min.is_finite()) {
        return Err(Error::InvalidInput(format!("tau_min must be positive, got {tau_min}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut agents = Vec::with_capacity(m);
    let mut witness = Vec::with_capacity(m);
    for &n in dims {
        let diag = Vector::from_fn(n, |_, _| rng.gen_range(tau_min..=10.0 * tau_min));
        let target = Vector::from_fn(n, |_, _| rng.gen_range(-1.5..=1.5));
        let lin = -diag.component_mul(&target);
        let a = Matrix::from_fn(p, n, |_, _| rng.gen_range(-1.0..=1.0));
        let x0 = Vector::from_fn(n, |_, _| rng.gen_range(-0.9..=0.9));
        let b = &a * &x0;
        let tau = diag.min();
        agents.push(AgentProblem::new(
            ObjectiveSpec::DiagonalQuadratic { diag, lin },
            Vector::from_element(n, -1.0),
            Vector::from_element(n, 1.0),
            a,
            b,
            tau,
            1.0,
        )?);
        witness.push(x0);
    }
    Ok((CoupledProblem::new(agents)?, witness))
}

/// [`make_quadratic_instance`] without the witness.
pub fn make_quadratic_problem(m: usize, p: usize, dims: &[usize], seed: u64, tau_min: f64) -> Result<CoupledProblem> {
    make_quadratic_instance(m, p, dims, seed, tau_min).map(|(problem, _)| problem)
}
