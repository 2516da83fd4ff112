//! Acceptance criteria, one test each. Every test writes a single
//! `criterion N: PASS|FAIL ...` line to stderr (uncaptured) before asserting.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use drdga::baseline::run_cdda;
use drdga::cli::{load_experiment, render_csv, run_experiment, Algorithm, Overrides};
use drdga::engine::{run_until, RunConfig, RunState, StopReason};
use drdga::graph::{build_weight_matrix, generate_graph_sequence, generate_pool_sequence, PoolOptions};
use drdga::linalg::{Matrix, Vector};
use drdga::localsolve::solve_local;
use drdga::metrics::{
    empirical_dual_bound, lemma2_residual, rate_fit, theorem2_bound, theorem3_bound, BoundConstants, MetricsRow,
    RateTarget,
};
use drdga::problem::{make_quadratic_problem, AgentProblem, CoupledProblem, ObjectiveSpec, SmoothObjective};
use drdga::reference::{solve_centralized, ReferenceSolution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: u32, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("criterion {n}: {verdict} {detail}\n");
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "criterion {n} failed: {detail}");
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn first_round(rows: &[MetricsRow], pred: impl Fn(&MetricsRow) -> bool) -> Option<usize> {
    rows.iter().find(|r| pred(r)).map(|r| r.t)
}

/// Three-source NUM instance from the bundled config, run to completion.
struct Fig7Run {
    reference: ReferenceSolution,
    rows: Vec<MetricsRow>,
    stop_reason: StopReason,
    x: Vec<Vector>,
}

fn fig7_run() -> &'static Fig7Run {
    static RUN: OnceLock<Fig7Run> = OnceLock::new();
    RUN.get_or_init(|| {
        let experiment = load_experiment(&config("fig7.cfg"), &Overrides::default()).unwrap();
        let reference = solve_centralized(&experiment.problem, 1e-9).unwrap();
        let out = run_until(
            &experiment.problem,
            &experiment.graph,
            &experiment.run,
            Some(reference.f_star),
        )
        .unwrap();
        Fig7Run {
            x: out.state.x().to_vec(),
            rows: out.rows,
            stop_reason: out.stop_reason,
            reference,
        }
    })
}

/// Quadratic rate run: m = 5, p = 3, swept to T = 10⁴ with the smallest admissible q.
struct QuadraticRun {
    problem: CoupledProblem,
    q: f64,
    window: usize,
    rows: Vec<MetricsRow>,
}

const RATE_T: usize = 10_000;
const RATE_WINDOW: usize = 2;

fn quadratic_run() -> &'static QuadraticRun {
    static RUN: OnceLock<QuadraticRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let problem = make_quadratic_problem(5, 3, &[2, 1, 3, 2, 1], 3, 1.0).unwrap();
        let seq = generate_graph_sequence(5, RATE_WINDOW, 3);
        let q = RunConfig::min_q(&problem);
        let f_star = solve_centralized(&problem, 1e-10).unwrap().f_star;
        let out = run_until(&problem, &seq, &RunConfig::new(q, RATE_T, 1e-300), Some(f_star)).unwrap();
        assert_eq!(out.rows.len(), RATE_T);
        QuadraticRun {
            problem,
            q,
            window: RATE_WINDOW,
            rows: out.rows,
        }
    })
}

#[test]
fn criterion_01_weight_matrix_law() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut checked = 0;
    let mut worst_sum = 0.0f64;
    let mut entries_ok = true;
    while checked < 1000 {
        let m = rng.gen_range(1..=10);
        let window = rng.gen_range(1..=3);
        let opts = PoolOptions {
            pool_size: rng.gen_range(1..=20),
            extra_edge_prob: rng.gen_range(0.0..0.5),
        };
        let seq = generate_pool_sequence(m, window, rng.gen(), opts);
        for t in 0..seq.period() {
            let edges = seq.edges(t);
            let w = build_weight_matrix(edges, m).unwrap();
            // d_j counts j itself plus every receiver of j
            let d: Vec<usize> = (0..m).map(|j| 1 + edges.iter().filter(|e| e.0 == j).count()).collect();
            for i in 0..m {
                for j in 0..m {
                    let linked = i == j || edges.contains(&(j, i));
                    let expected = if linked { 1.0 / d[j] as f64 } else { 0.0 };
                    entries_ok &= w.entries()[(i, j)] == expected;
                }
            }
            for s in w.column_sums() {
                worst_sum = worst_sum.max((s - 1.0).abs());
            }
            checked += 1;
        }
    }
    report(
        1,
        entries_ok && worst_sum <= 1e-12,
        format!("{checked} matrices, exact entries = {entries_ok}, max |column sum - 1| = {worst_sum:.2e}"),
    );
}

#[test]
fn criterion_02_push_sum_mass_and_positivity() {
    let (m, window) = (5usize, 3usize);
    let problem = make_quadratic_problem(m, 2, &[1, 2, 1, 2, 1], 2, 1.0).unwrap();
    let seq = generate_graph_sequence(m, window, 2);
    let mut state = RunState::init(&problem, &RunConfig::new(4.0, 5000, 1e-9)).unwrap();
    let floor = (m as f64).powi(-((m * window) as i32));
    let mut worst_mass = 0.0f64;
    let mut min_rho = f64::INFINITY;
    for _ in 0..5000 {
        state = state.advance_round(&problem, &seq).unwrap();
        let total: f64 = state.rho().iter().sum();
        worst_mass = worst_mass.max((total - m as f64).abs());
        min_rho = state.rho().iter().copied().fold(min_rho, f64::min);
    }
    report(
        2,
        worst_mass <= 1e-9 && min_rho >= floor,
        format!("max |sum rho - m| = {worst_mass:.2e}, min rho = {min_rho:.3e} (floor {floor:.3e})"),
    );
}

#[test]
fn criterion_03_dual_consensus() {
    let run = fig7_run();
    // round from which disagreement stays at or below 0.01 through round 200
    let head = &run.rows[..200.min(run.rows.len())];
    let settled = head.iter().rev().find(|r| r.disagreement > 0.01).map_or(1, |r| r.t + 1);
    let peak = head.iter().map(|r| r.disagreement).fold(0.0, f64::max);
    report(
        3,
        head.len() == 200 && settled <= 200,
        format!("max pairwise |lambda_i - lambda_j| <= 0.01 from round {settled} on (limit 200, peak {peak:.3})"),
    );
}

#[test]
fn criterion_04_num_convergence() {
    let run = fig7_run();
    let converged = run.stop_reason == StopReason::Converged;
    let max_dev = run
        .x
        .iter()
        .zip(&run.reference.x)
        .map(|(a, b)| (a - b).amax())
        .fold(0.0, f64::max);
    let link2: f64 = run.x.iter().map(|x| x[0]).sum();
    let pass = converged && run.rows.len() <= 5000 && max_dev <= 5e-2 && link2 <= 1.0 + 5e-2;
    report(
        4,
        pass,
        format!(
            "stop = {}, rounds = {}, max |x - x*| = {max_dev:.4}, link-2 load = {link2:.4} (x = {:?}, x* = {:?})",
            run.stop_reason.as_str(),
            run.rows.len(),
            run.x.iter().map(|v| v[0]).collect::<Vec<_>>(),
            run.reference.x.iter().map(|v| v[0]).collect::<Vec<_>>(),
        ),
    );
}

fn retained(rows: &[MetricsRow]) -> Vec<MetricsRow> {
    rows.iter().filter(|r| r.t >= 100).copied().collect()
}

#[test]
fn criterion_05_rate_law() {
    let run = quadratic_run();
    let rows = retained(&run.rows);
    let fit = rate_fit(&rows, RateTarget::Gap).unwrap();
    let negative = rows.iter().filter(|r| r.gap < 0.0).count();
    let g = |r: &MetricsRow| (r.gap * r.t as f64 / (r.t as f64).ln()).abs();
    let abs_ratio = rows.iter().map(g).fold(0.0, f64::max) / g(&rows[0]);
    report(
        5,
        fit.max_ratio <= 10.0,
        format!(
            "gap rate fit over T in [100, {RATE_T}]: c_hat = {:.4e}, max_ratio = {:.4} \
             ({negative}/{} gaps negative, max |g|/|g(T0)| = {abs_ratio:.1})",
            fit.c_hat,
            fit.max_ratio,
            rows.len()
        ),
    );
}

#[test]
fn criterion_06_violation_law() {
    let run = quadratic_run();
    let fit = rate_fit(&retained(&run.rows), RateTarget::ViolationSquared).unwrap();
    report(
        6,
        fit.max_ratio <= 10.0,
        format!(
            "violation^2 rate fit over T in [100, {RATE_T}]: c_hat = {:.4e}, max_ratio = {:.4}",
            fit.c_hat, fit.max_ratio
        ),
    );
}

fn quarter_maxima(rows: &[MetricsRow]) -> (f64, f64) {
    let q = rows.len() / 4;
    let first = rows[..q].iter().map(|r| r.max_lambda).fold(0.0, f64::max);
    let last = rows[rows.len() - q..].iter().map(|r| r.max_lambda).fold(0.0, f64::max);
    (first, last)
}

#[test]
fn criterion_07_dual_boundedness() {
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, rows) in [("fig7", &fig7_run().rows), ("quadratic", &quadratic_run().rows)] {
        let (first, last) = quarter_maxima(rows);
        let ok = if first < 1.0 { last <= 1.0 } else { last <= 1.1 * first };
        pass &= ok;
        detail.push(format!("{name}: first quarter {first:.4}, last quarter {last:.4}"));
    }
    report(7, pass, detail.join("; "));
}

/// `1 − (1 − δ)^a` by its binomial series.
fn one_minus_power(delta: f64, a: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..200 {
        term *= (a - (k - 1) as f64) / k as f64 * -delta;
        sum -= term;
        if term.abs() < 1e-30 {
            break;
        }
    }
    sum
}

/// The printed right-hand sides, written out directly.
fn printed_bounds(
    t: usize,
    g: &[f64],
    gammas: &[f64],
    p: usize,
    d: f64,
    q: f64,
    window: usize,
    th0: f64,
) -> (f64, f64) {
    let m = g.len() as f64;
    let t = t as f64;
    let delta = 1.0 / m.powf(m * window as f64);
    let one_minus_eta = one_minus_power(delta, 1.0 / (m * window as f64));
    let eta = 1.0 - one_minus_eta;
    let gamma: f64 = gammas.iter().sum();
    let terms: Vec<f64> = g.iter().zip(gammas).map(|(gi, yi)| gi + yi * d).collect();
    let b = terms.iter().map(|v| (p as f64).sqrt() * v).fold(f64::MIN, f64::max);
    let s1: f64 = terms.iter().sum();
    let s2: f64 = terms.iter().map(|v| v * v).sum();
    let th2 =
        32.0 / (t * delta) * s1 * (eta / one_minus_eta * th0 + q * m * b / one_minus_eta * (1.0 + t.ln())) + q / t * s2;
    let th3 =
        gamma / (t * delta) * s1 * (8.0 * eta / one_minus_eta * th0 + 8.0 * q * m * b / one_minus_eta * (1.0 + t.ln()))
            + q * gamma / (4.0 * t) * s2;
    (th2, th3)
}

#[test]
fn criterion_08_bound_fidelity() {
    let sets: [(Vec<f64>, Vec<f64>, usize, f64, f64, usize, f64, usize); 3] = [
        (vec![1.0, 2.0], vec![1.0, 1.0], 1, 0.5, 4.0, 1, 0.0, 10),
        (vec![0.5, 1.5, 2.5], vec![0.5, 1.0, 1.5], 2, 2.0, 6.0, 1, 1.25, 100),
        (
            vec![3.0, 1.0, 2.0, 0.25],
            vec![2.0, 1.0, 1.0, 0.5],
            3,
            1.5,
            3.5,
            2,
            4.0,
            1000,
        ),
    ];
    let mut worst_rel = 0.0f64;
    for (g, gammas, p, d, q, window, th0, t) in sets {
        let c = BoundConstants::from_parts(g.clone(), gammas.clone(), p, d, q, window, th0);
        let (e2, e3) = printed_bounds(t, &g, &gammas, p, d, q, window, th0);
        worst_rel = worst_rel
            .max(((theorem2_bound(t, &c) - e2) / e2).abs())
            .max(((theorem3_bound(t, &c) - e3) / e3).abs());
    }

    let run = quadratic_run();
    let d = empirical_dual_bound(&run.rows);
    let c = BoundConstants::new(&run.problem, run.q, run.window, 0.0, d);
    let mut violations = 0;
    for r in &run.rows {
        if r.gap > theorem2_bound(r.t, &c) || r.violation * r.violation > theorem3_bound(r.t, &c) {
            violations += 1;
        }
    }
    report(
        8,
        worst_rel <= 1e-12 && violations == 0,
        format!("max relative formula error = {worst_rel:.2e}, rounds exceeding bounds = {violations}"),
    );
}

#[test]
fn criterion_09_lemma2_residual() {
    let problem = make_quadratic_problem(4, 2, &[2, 1, 1, 2], 9, 1.0).unwrap();
    let seq = generate_graph_sequence(4, 2, 9);
    let cfg = RunConfig::new(RunConfig::min_q(&problem), 50, 1e-12);
    let mut states = vec![RunState::init(&problem, &cfg).unwrap()];
    for _ in 0..50 {
        let next = states.last().unwrap().advance_round(&problem, &seq).unwrap();
        states.push(next);
    }
    let d = states
        .iter()
        .flat_map(|s| {
            s.lambda()
                .iter()
                .map(|l| l.norm())
                .chain(std::iter::once(s.theta_bar().norm()))
        })
        .fold(0.0, f64::max);
    let c = BoundConstants::new(&problem, cfg.q, seq.window(), 0.0, d);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = f64::INFINITY;
    for pair in states.windows(2) {
        for _ in 0..20 {
            let dir = Vector::from_fn(problem.p(), |_, _| rng.gen_range(-1.0..1.0));
            let probe = dir.normalize() * (d * rng.gen_range(0.0..1.0));
            worst = worst.min(lemma2_residual(&pair[0], &pair[1], &problem, &probe, &c));
        }
    }
    report(
        9,
        worst >= -1e-8,
        format!("50 rounds x 20 probes, D = {d:.4}, min residual = {worst:.3e}"),
    );
}

struct Quartic;

impl SmoothObjective for Quartic {
    fn value(&self, x: &Vector) -> f64 {
        x.iter().map(|v| v * v + v.powi(4) / 4.0).sum()
    }
    fn gradient(&self, x: &Vector) -> Vector {
        x.map(|v| 2.0 * v + v.powi(3))
    }
    fn modulus(&self) -> f64 {
        2.0
    }
    fn lipschitz(&self) -> f64 {
        5.0
    }
}

fn grid_minimizer(agent: &AgentProblem, lambda: &Vector) -> f64 {
    let (lo, hi) = (agent.lower()[0], agent.upper()[0]);
    let steps = ((hi - lo) / 1e-4).round() as usize;
    let mut best = (f64::INFINITY, lo);
    for k in 0..=steps {
        let x = Vector::from_element(1, lo + (hi - lo) * k as f64 / steps as f64);
        let v = agent.value(&x) + lambda.dot(&agent.residual(&x));
        if v < best.0 {
            best = (v, x[0]);
        }
    }
    best.1
}

#[test]
fn criterion_10_local_solver_oracle() {
    let a = Matrix::from_row_slice(2, 1, &[1.0, -0.5]);
    let b = Vector::from_vec(vec![0.2, 0.1]);
    let families = [
        (
            "quadratic",
            ObjectiveSpec::DiagonalQuadratic {
                diag: Vector::from_element(1, 2.5),
                lin: Vector::from_element(1, -0.75),
            },
            -1.0,
            1.0,
            2.5,
        ),
        (
            "log-utility",
            ObjectiveSpec::LogUtility { weight: 0.5 },
            0.0,
            1.0,
            20.0 * 0.5 / 1.21,
        ),
        (
            "general-smooth",
            ObjectiveSpec::GeneralSmooth(Arc::new(Quartic)),
            -1.0,
            1.0,
            2.0,
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    let mut detail = Vec::new();
    for (name, objective, lo, hi, tau) in families {
        let agent = AgentProblem::new(
            objective,
            Vector::from_element(1, lo),
            Vector::from_element(1, hi),
            a.clone(),
            b.clone(),
            tau,
            1.0,
        )
        .unwrap();
        let mut family_worst = 0.0f64;
        for _ in 0..100 {
            let lambda = Vector::from_fn(2, |_, _| rng.gen_range(-20.0..20.0));
            let closed = solve_local(&agent, &lambda).unwrap()[0];
            family_worst = family_worst.max((closed - grid_minimizer(&agent, &lambda)).abs());
        }
        worst = worst.max(family_worst);
        detail.push(format!("{name} {family_worst:.2e}"));
    }
    report(
        10,
        worst <= 1e-3,
        format!("max |closed form - grid| per family: {}", detail.join(", ")),
    );
}

#[test]
fn criterion_11_baseline_comparison() {
    let overrides = Overrides {
        epsilon: Some(1e-300),
        ..Overrides::default()
    };
    let exp = load_experiment(&config("num_s20_l19.cfg"), &overrides).unwrap();
    assert_eq!((exp.problem.m(), exp.problem.p()), (20, 19));
    let drdga = run_until(&exp.problem, &exp.graph, &exp.run, None).unwrap();
    let cdda = run_cdda(&exp.problem, &exp.graph, &exp.run, None).unwrap();
    let hit_d = first_round(&drdga.rows, |r| r.violation <= 0.05);
    let hit_c = first_round(&cdda.rows, |r| r.violation <= 0.05);
    let pass = match (hit_d, hit_c) {
        (Some(d), Some(c)) => d <= c,
        (Some(_), None) => true,
        (None, _) => false,
    };
    report(
        11,
        pass,
        format!(
            "first round with violation <= 0.05 over {} rounds: drdga {hit_d:?} (final {:.4}), cdda {hit_c:?} (final {:.4})",
            exp.run.t_max,
            drdga.rows.last().unwrap().violation,
            cdda.rows.last().unwrap().violation,
        ),
    );
}

#[test]
fn criterion_12_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("fig7.cfg");
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    run_experiment(&cfg, &a, &Overrides::default()).unwrap();
    run_experiment(&cfg, &b, &Overrides::default()).unwrap();
    let (ca, cb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    // the in-memory path renders the same bytes
    let exp = load_experiment(&cfg, &Overrides::default()).unwrap();
    assert_eq!(exp.algorithm, Algorithm::Drdga);
    let again = render_csv(&exp.run().unwrap().rows);
    report(
        12,
        ca == cb && ca == again.as_bytes(),
        format!(
            "two CLI runs of fig7.cfg: {} bytes each, identical = {}",
            ca.len(),
            ca == cb
        ),
    );
}
