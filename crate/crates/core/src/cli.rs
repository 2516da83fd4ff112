//! Experiment configs, orchestration and CSV/summary output.
//!
//! Configs are TOML with four parts:
//!
//! ```toml
//! algorithm = "drdga"            # or "cdda"
//!
//! [problem]
//! family = "num"                 # or "quadratic"
//! routing = [[1, 1, 0], [1, 1, 1]]
//! capacities = [1.0, 1.0]
//! gammas = [1.0, 1.0, 1.0]       # or `gamma = 1.0` for all sources
//! # random NUM instead of `routing`/`capacities`:
//! # sources = 20, links = 19, per_link = 3, seed = 1, gamma = 1.0
//! # quadratic: m, p, dims, seed, tau_min, optional gamma
//!
//! [graph]
//! mode = "random-pool"           # window, seed, pool_size = 20, extra_edge_prob = 0.15
//! # mode = "edge-list"           # path (relative to the config file), window
//!
//! [run]
//! q = 4.0
//! t_max = 5000
//! epsilon = 0.01
//! # theta0 = [[0.0, 0.0], ...]   # one p-vector per agent
//! ```
//!
//! `m` for the graph is taken from the problem; `graph.m` may be given and
//! must then agree with it.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use toml::{Table, Value};

use crate::baseline::run_cdda;
use crate::engine::{run_until, RunConfig, StopReason};
use crate::graph::{generate_pool_sequence, GraphSequence, PoolOptions, DEFAULT_EXTRA_EDGE_PROB, DEFAULT_POOL_SIZE};
use crate::linalg::{Matrix, Vector};
use crate::metrics::{
    empirical_dual_bound, fmt_float, theorem2_bound, theorem3_bound, BoundConstants, MetricsRow, CSV_HEADER,
};
use crate::problem::{make_num_problem, make_quadratic_problem, make_random_num_problem, CoupledProblem};
use crate::reference::{solve_centralized, ReferenceSolution};
use crate::{Error, Result};

/// Tolerance on the coupling violation for the F* computed alongside a run.
pub const REFERENCE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Drdga,
    Cdda,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Drdga => "drdga",
            Self::Cdda => "cdda",
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "drdga" => Ok(Self::Drdga),
            "cdda" => Ok(Self::Cdda),
            other => Err(Error::config(
                "algorithm",
                format!("unknown algorithm `{other}`; expected one of {{drdga, cdda}}"),
            )),
        }
    }
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub algorithm: Option<Algorithm>,
    /// Replaces `graph.seed`.
    pub seed: Option<u64>,
    pub t_max: Option<usize>,
    pub epsilon: Option<f64>,
}

/// A fully validated experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub algorithm: Algorithm,
    pub problem: CoupledProblem,
    pub graph: GraphSequence,
    pub run: RunConfig,
}

pub fn parse_config(path: &Path) -> Result<Experiment> {
    load_experiment(path, &Overrides::default())
}

pub fn load_experiment(path: &Path, overrides: &Overrides) -> Result<Experiment> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::config("<file>", format!("cannot read {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_config_str(&text, base, overrides)
}

/// Parses config text; relative edge-list paths resolve against `base_dir`.
pub fn parse_config_str(text: &str, base_dir: &Path, overrides: &Overrides) -> Result<Experiment> {
    let root: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::config("<file>", e.to_string()))?;
    let algorithm = match overrides.algorithm {
        Some(a) => a,
        None => match root.get("algorithm") {
            None => Algorithm::Drdga,
            Some(v) => as_str(v, "algorithm")?.parse()?,
        },
    };
    let problem = parse_problem(section(&root, "problem")?)?;
    let graph = parse_graph(section(&root, "graph")?, problem.m(), base_dir, overrides.seed)?;
    let mut run = parse_run(section(&root, "run")?)?;
    if let Some(t) = overrides.t_max {
        run.t_max = t;
    }
    if let Some(eps) = overrides.epsilon {
        run.epsilon = eps;
    }
    run.validate(&problem)?;
    Ok(Experiment {
        algorithm,
        problem,
        graph,
        run,
    })
}

fn section<'a>(root: &'a Table, name: &str) -> Result<&'a Table> {
    match root.get(name) {
        Some(Value::Table(t)) => Ok(t),
        Some(_) => Err(Error::config(name, "expected a section")),
        None => Err(Error::config(name, "missing section")),
    }
}

fn field<'a>(table: &'a Table, section: &str, key: &str) -> Result<&'a Value> {
    table
        .get(key)
        .ok_or_else(|| Error::config(format!("{section}.{key}"), "missing field"))
}

fn as_str<'a>(v: &'a Value, path: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| Error::config(path, "expected a string"))
}

fn as_f64(v: &Value, path: &str) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::config(path, "expected a number")),
    }
}

fn as_usize(v: &Value, path: &str) -> Result<usize> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(Error::config(path, "expected a non-negative integer")),
    }
}

fn as_f64_list(v: &Value, path: &str) -> Result<Vec<f64>> {
    let items = v.as_array().ok_or_else(|| Error::config(path, "expected an array"))?;
    items
        .iter()
        .enumerate()
        .map(|(k, x)| as_f64(x, &format!("{path}[{k}]")))
        .collect()
}

fn as_usize_list(v: &Value, path: &str) -> Result<Vec<usize>> {
    let items = v.as_array().ok_or_else(|| Error::config(path, "expected an array"))?;
    items
        .iter()
        .enumerate()
        .map(|(k, x)| as_usize(x, &format!("{path}[{k}]")))
        .collect()
}

fn as_rows(v: &Value, path: &str) -> Result<Vec<Vec<f64>>> {
    let items = v
        .as_array()
        .ok_or_else(|| Error::config(path, "expected an array of arrays"))?;
    items
        .iter()
        .enumerate()
        .map(|(k, row)| as_f64_list(row, &format!("{path}[{k}]")))
        .collect()
}

fn get<'a, T>(t: &'a Table, section: &str, key: &str, conv: impl Fn(&'a Value, &str) -> Result<T>) -> Result<T> {
    conv(field(t, section, key)?, &format!("{section}.{key}"))
}

fn get_opt<'a, T>(
    t: &'a Table,
    section: &str,
    key: &str,
    conv: impl Fn(&'a Value, &str) -> Result<T>,
) -> Result<Option<T>> {
    t.get(key).map(|v| conv(v, &format!("{section}.{key}"))).transpose()
}

fn in_field<T>(path: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Config { .. } => e,
        other => Error::config(path, other.to_string()),
    })
}

fn parse_problem(t: &Table) -> Result<CoupledProblem> {
    const S: &str = "problem";
    match get(t, S, "family", as_str)? {
        "num" => {
            if t.contains_key("routing") {
                let rows = get(t, S, "routing", as_rows)?;
                let links = rows.len();
                let sources = rows.first().map_or(0, Vec::len);
                if links == 0 || sources == 0 || rows.iter().any(|r| r.len() != sources) {
                    return Err(Error::config(
                        "problem.routing",
                        "expected a non-empty rectangular matrix",
                    ));
                }
                let routing = Matrix::from_fn(links, sources, |l, s| rows[l][s]);
                let caps = get(t, S, "capacities", as_f64_list)?;
                let gammas = match get_opt(t, S, "gammas", as_f64_list)? {
                    Some(g) => g,
                    None => vec![get(t, S, "gamma", as_f64)?; sources],
                };
                in_field(S, make_num_problem(&routing, &Vector::from_vec(caps), &gammas))
            } else {
                in_field(
                    S,
                    make_random_num_problem(
                        get(t, S, "sources", as_usize)?,
                        get(t, S, "links", as_usize)?,
                        get(t, S, "per_link", as_usize)?,
                        get(t, S, "seed", as_usize)? as u64,
                        get(t, S, "gamma", as_f64)?,
                    ),
                )
            }
        }
        "quadratic" => {
            let m = get(t, S, "m", as_usize)?;
            let dims = get_opt(t, S, "dims", as_usize_list)?.unwrap_or_else(|| vec![1; m]);
            let problem = in_field(
                S,
                make_quadratic_problem(
                    m,
                    get(t, S, "p", as_usize)?,
                    &dims,
                    get(t, S, "seed", as_usize)? as u64,
                    get(t, S, "tau_min", as_f64)?,
                ),
            )?;
            match get_opt(t, S, "gamma", as_f64)? {
                Some(g) => in_field("problem.gamma", problem.with_uniform_gamma(g)),
                None => Ok(problem),
            }
        }
        other => Err(Error::config(
            "problem.family",
            format!("unknown family `{other}`; expected one of {{num, quadratic}}"),
        )),
    }
}

fn parse_graph(t: &Table, m: usize, base_dir: &Path, seed_override: Option<u64>) -> Result<GraphSequence> {
    const S: &str = "graph";
    if let Some(gm) = get_opt(t, S, "m", as_usize)? {
        if gm != m {
            return Err(Error::config(
                "graph.m",
                format!("graph has {gm} agents, problem has {m}"),
            ));
        }
    }
    let window = get(t, S, "window", as_usize)?;
    if window == 0 {
        return Err(Error::config("graph.window", "must be at least 1"));
    }
    match get(t, S, "mode", as_str)? {
        "random-pool" => {
            let seed = match seed_override {
                Some(s) => s,
                None => get(t, S, "seed", as_usize)? as u64,
            };
            let pool_size = get_opt(t, S, "pool_size", as_usize)?.unwrap_or(DEFAULT_POOL_SIZE);
            if pool_size == 0 {
                return Err(Error::config("graph.pool_size", "must be at least 1"));
            }
            let extra_edge_prob = get_opt(t, S, "extra_edge_prob", as_f64)?.unwrap_or(DEFAULT_EXTRA_EDGE_PROB);
            if !(0.0..=1.0).contains(&extra_edge_prob) {
                return Err(Error::config("graph.extra_edge_prob", "must lie in [0, 1]"));
            }
            Ok(generate_pool_sequence(
                m,
                window,
                seed,
                PoolOptions {
                    pool_size,
                    extra_edge_prob,
                },
            ))
        }
        "edge-list" => {
            let rel = PathBuf::from(get(t, S, "path", as_str)?);
            let path = if rel.is_absolute() { rel } else { base_dir.join(rel) };
            let text = fs::read_to_string(&path)
                .map_err(|e| Error::config("graph.path", format!("cannot read {}: {e}", path.display())))?;
            in_field("graph.path", GraphSequence::parse_edge_list(&text, m, window))
        }
        other => Err(Error::config(
            "graph.mode",
            format!("unknown mode `{other}`; expected one of {{random-pool, edge-list}}"),
        )),
    }
}

fn parse_run(t: &Table) -> Result<RunConfig> {
    const S: &str = "run";
    let mut run = RunConfig::new(
        get(t, S, "q", as_f64)?,
        get(t, S, "t_max", as_usize)?,
        get(t, S, "epsilon", as_f64)?,
    );
    if let Some(rows) = get_opt(t, S, "theta0", as_rows)? {
        run.theta0 = Some(rows.into_iter().map(Vector::from_vec).collect());
    }
    Ok(run)
}

/// What a finished run reports besides its rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub algorithm: Algorithm,
    pub stop_reason: StopReason,
    pub terminal_round: usize,
    /// `None` when the reference solver failed.
    pub f_star: Option<f64>,
    pub empirical_d: f64,
    pub theorem2_bound: f64,
    pub theorem3_bound: f64,
    pub final_gap: f64,
    pub final_violation: f64,
    pub final_violation_inst: f64,
}

impl Summary {
    /// `key=value` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let f_star = self.f_star.map_or_else(|| "nan".to_string(), fmt_float);
        let _ = writeln!(out, "algorithm={}", self.algorithm.as_str());
        let _ = writeln!(out, "stop_reason={}", self.stop_reason.as_str());
        let _ = writeln!(out, "terminal_round={}", self.terminal_round);
        let _ = writeln!(out, "f_star={f_star}");
        let _ = writeln!(out, "empirical_d={}", fmt_float(self.empirical_d));
        let _ = writeln!(out, "theorem2_bound={}", fmt_float(self.theorem2_bound));
        let _ = writeln!(out, "theorem3_bound={}", fmt_float(self.theorem3_bound));
        let _ = writeln!(out, "final_gap={}", fmt_float(self.final_gap));
        let _ = writeln!(out, "final_violation={}", fmt_float(self.final_violation));
        let _ = writeln!(out, "final_violation_inst={}", fmt_float(self.final_violation_inst));
        out
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub rows: Vec<MetricsRow>,
    pub summary: Summary,
    /// Terminal instantaneous primal iterate.
    pub x: Vec<Vector>,
    pub reference: Option<ReferenceSolution>,
}

impl Experiment {
    pub fn reference(&self) -> Result<ReferenceSolution> {
        solve_centralized(&self.problem, REFERENCE_TOLERANCE)
    }

    pub fn run(&self) -> Result<ExperimentResult> {
        let reference = self.reference().ok();
        let f_star = reference.as_ref().map(|r| r.f_star);
        let (rows, stop_reason, x) = match self.algorithm {
            Algorithm::Drdga => {
                let out = run_until(&self.problem, &self.graph, &self.run, f_star)?;
                (out.rows, out.stop_reason, out.state.x().to_vec())
            }
            Algorithm::Cdda => {
                let out = run_cdda(&self.problem, &self.graph, &self.run, f_star)?;
                (out.rows, out.stop_reason, out.state.x().to_vec())
            }
        };
        let last = *rows
            .last()
            .ok_or_else(|| Error::Invariant("run produced no rows".into()))?;
        let d = empirical_dual_bound(&rows);
        let consts = BoundConstants::new(&self.problem, self.run.q, self.graph.window(), self.run.theta0_l1(), d);
        let summary = Summary {
            algorithm: self.algorithm,
            stop_reason,
            terminal_round: last.t,
            f_star,
            empirical_d: d,
            theorem2_bound: theorem2_bound(last.t, &consts),
            theorem3_bound: theorem3_bound(last.t, &consts),
            final_gap: last.gap,
            final_violation: last.violation,
            final_violation_inst: last.violation_inst,
        };
        Ok(ExperimentResult {
            rows,
            summary,
            x,
            reference,
        })
    }
}

/// Header plus one line per row.
pub fn render_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::with_capacity(rows.len() * 160);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv());
        out.push('\n');
    }
    out
}

/// `run.csv` → `run.summary`.
pub fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("summary")
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Loads the config, runs it and writes the CSV to `out` and the summary next to it.
pub fn run_experiment(config: &Path, out: &Path, overrides: &Overrides) -> Result<Summary> {
    let experiment = load_experiment(config, overrides)?;
    let result = experiment.run()?;
    write(out, &render_csv(&result.rows))?;
    write(&summary_path(out), &result.summary.to_text())?;
    Ok(result.summary)
}
