//! Time-varying directed communication graphs.
//!
//! An edge `(i, j)` means "agent `i` sends to agent `j`". Agent indices are
//! zero-based in the API and one-based in edge-list files. Self-loops are
//! implicit: every agent always hears itself, so they are never stored and
//! count exactly once toward the out-degree.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use petgraph::algo::kosaraju_scc;
use petgraph::graph::DiGraph;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{Matrix, Vector};
use crate::{Error, Result};

/// Directed edges of a single round, sorted for deterministic iteration.
pub type EdgeSet = BTreeSet<(usize, usize)>;

/// Default number of per-round graphs the random generator cycles through.
pub const DEFAULT_POOL_SIZE: usize = 20;

/// Default probability of each extra directed edge on top of the window cycle.
pub const DEFAULT_EXTRA_EDGE_PROB: f64 = 0.15;

/// Column-stochastic mixing matrix with `(W)_ij = 1/d_j` whenever `j` is an
/// in-neighbor of `i` (including `i` itself).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    entries: Matrix,
}

impl WeightMatrix {
    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// `out_i = Σ_j W_ij v_j` for vector-valued agent states.
    pub fn mix(&self, values: &[Vector]) -> Vec<Vector> {
        let m = self.dim();
        debug_assert_eq!(values.len(), m);
        (0..m)
            .map(|i| {
                let mut acc = Vector::zeros(values[0].len());
                for (j, v) in values.iter().enumerate() {
                    let w = self.entries[(i, j)];
                    if w != 0.0 {
                        acc.axpy(w, v, 1.0);
                    }
                }
                acc
            })
            .collect()
    }

    /// `out_i = Σ_j W_ij s_j` for scalar agent states.
    pub fn mix_scalars(&self, values: &[f64]) -> Vec<f64> {
        let m = self.dim();
        (0..m)
            .map(|i| (0..m).map(|j| self.entries[(i, j)] * values[j]).sum())
            .collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        self.entries.column_iter().map(|c| c.sum()).collect()
    }
}

fn check_edge(from: usize, to: usize, m: usize) -> Result<()> {
    if from >= m || to >= m || from == to {
        return Err(Error::InvalidEdge { from, to, m });
    }
    Ok(())
}

/// Builds `W[t]` from one round's edges.
///
/// `d_j` is one plus the out-degree of `j`; column `j` carries `1/d_j` on the
/// diagonal and at every receiver of `j`.
pub fn build_weight_matrix(edges: &EdgeSet, m: usize) -> Result<WeightMatrix> {
    if m == 0 {
        return Err(Error::InvalidInput("weight matrix needs m >= 1".into()));
    }
    let mut out_degree = vec![1usize; m];
    for &(from, to) in edges {
        check_edge(from, to, m)?;
        out_degree[from] += 1;
    }
    let mut entries = Matrix::zeros(m, m);
    for j in 0..m {
        entries[(j, j)] = 1.0 / out_degree[j] as f64;
    }
    for &(from, to) in edges {
        entries[(to, from)] = 1.0 / out_degree[from] as f64;
    }
    Ok(WeightMatrix { entries })
}

/// `true` iff the directed graph on `m` nodes is strongly connected.
pub fn is_strongly_connected<'a>(m: usize, edges: impl IntoIterator<Item = &'a (usize, usize)>) -> bool {
    if m <= 1 {
        return true;
    }
    let mut g = DiGraph::<(), ()>::with_capacity(m, 0);
    let nodes: Vec<_> = (0..m).map(|_| g.add_node(())).collect();
    for &(from, to) in edges {
        g.add_edge(nodes[from], nodes[to], ());
    }
    kosaraju_scc(&g).len() == 1
}

/// A deterministic sequence of per-round edge sets, cycled with period
/// `rounds.len()`, together with its declared connectivity window.
#[derive(Debug, Clone)]
pub struct GraphSequence {
    m: usize,
    window: usize,
    seed: u64,
    rounds: Vec<EdgeSet>,
    matrices: Vec<WeightMatrix>,
}

impl GraphSequence {
    /// Wraps explicit per-round edge sets. Round `t` uses `rounds[t % len]`.
    ///
    /// Window connectivity is not checked here; see
    /// [`verify_window_connectivity`].
    pub fn from_rounds(m: usize, window: usize, rounds: Vec<EdgeSet>) -> Result<Self> {
        Self::with_seed(m, window, 0, rounds)
    }

    fn with_seed(m: usize, window: usize, seed: u64, rounds: Vec<EdgeSet>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidInput("graph sequence needs m >= 1".into()));
        }
        if window == 0 {
            return Err(Error::InvalidInput("connectivity window must be >= 1".into()));
        }
        if rounds.is_empty() {
            return Err(Error::InvalidInput("graph sequence needs at least one round".into()));
        }
        let matrices = rounds
            .iter()
            .map(|e| build_weight_matrix(e, m))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            m,
            window,
            seed,
            rounds,
            matrices,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of distinct rounds before the sequence repeats.
    pub fn period(&self) -> usize {
        self.rounds.len()
    }

    pub fn edges(&self, t: usize) -> &EdgeSet {
        &self.rounds[t % self.rounds.len()]
    }

    pub fn weight_matrix(&self, t: usize) -> &WeightMatrix {
        &self.matrices[t % self.matrices.len()]
    }

    /// Parses the edge-list format: one line per round, `;`-separated `i>j`
    /// pairs with one-based indices. Blank lines are rounds without edges;
    /// lines starting with `#` are skipped.
    pub fn parse_edge_list(text: &str, m: usize, window: usize) -> Result<Self> {
        let mut rounds = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.starts_with('#') {
                continue;
            }
            let mut edges = EdgeSet::new();
            for pair in line.split(';').map(str::trim).filter(|p| !p.is_empty()) {
                let parsed = pair
                    .split_once('>')
                    .and_then(|(a, b)| Some((a.trim().parse::<usize>().ok()?, b.trim().parse::<usize>().ok()?)));
                let (from, to) = parsed
                    .ok_or_else(|| Error::InvalidInput(format!("line {}: malformed edge `{pair}`", lineno + 1)))?;
                if from == 0 || to == 0 {
                    return Err(Error::InvalidEdge { from, to, m });
                }
                check_edge(from - 1, to - 1, m).map_err(|_| Error::InvalidEdge { from, to, m })?;
                edges.insert((from - 1, to - 1));
            }
            rounds.push(edges);
        }
        Self::from_rounds(m, window, rounds)
    }

    /// Serializes one period in the edge-list format.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for edges in &self.rounds {
            let line: Vec<String> = edges.iter().map(|(i, j)| format!("{}>{}", i + 1, j + 1)).collect();
            let _ = writeln!(out, "{}", line.join(";"));
        }
        out
    }
}

/// Knobs for the random pool generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolOptions {
    pub pool_size: usize,
    pub extra_edge_prob: f64,
}

impl Default for PoolOptions {
    fn default() -> Self {
        Self {
            pool_size: DEFAULT_POOL_SIZE,
            extra_edge_prob: DEFAULT_EXTRA_EDGE_PROB,
        }
    }
}

/// Random `window`-strongly-connected sequence with the default pool options.
pub fn generate_graph_sequence(m: usize, window: usize, seed: u64) -> GraphSequence {
    generate_pool_sequence(m, window, seed, PoolOptions::default())
}

/// Generates a pool of per-round graphs and cycles through it.
///
/// The pool length is `pool_size` rounded up to a multiple of `window`, so
/// every connectivity window maps onto one aligned block of the pool. Each
/// block embeds a randomly oriented cycle through all agents, its edges
/// scattered over the block's rounds, plus independent extra edges.
///
/// # Panics
///
/// If `m == 0` or `window == 0`.
pub fn generate_pool_sequence(m: usize, window: usize, seed: u64, opts: PoolOptions) -> GraphSequence {
    assert!(
        m >= 1 && window >= 1,
        "generate_pool_sequence needs m >= 1 and window >= 1"
    );
    let blocks = opts.pool_size.max(1).div_ceil(window);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rounds = Vec::with_capacity(blocks * window);
    let mut order: Vec<usize> = (0..m).collect();
    for _ in 0..blocks {
        let mut block = vec![EdgeSet::new(); window];
        if m > 1 {
            order.shuffle(&mut rng);
            for k in 0..m {
                let edge = (order[k], order[(k + 1) % m]);
                if edge.0 != edge.1 {
                    block[rng.gen_range(0..window)].insert(edge);
                }
            }
            for edges in block.iter_mut() {
                for i in 0..m {
                    for j in 0..m {
                        if i != j && rng.gen_bool(opts.extra_edge_prob) {
                            edges.insert((i, j));
                        }
                    }
                }
            }
        }
        rounds.extend(block);
    }
    GraphSequence::with_seed(m, window, seed, rounds).expect("generated edges are in range")
}

/// Checks every complete window `[kB, (k+1)B − 1]` inside `[0, horizon)`.
///
/// Vacuously `true` when `horizon < window`.
pub fn verify_window_connectivity(seq: &GraphSequence, horizon: usize) -> bool {
    let b = seq.window();
    (0..horizon / b).all(|k| {
        let union: EdgeSet = (k * b..(k + 1) * b)
            .flat_map(|t| seq.edges(t).iter().copied())
            .collect();
        is_strongly_connected(seq.m(), &union)
    })
}
