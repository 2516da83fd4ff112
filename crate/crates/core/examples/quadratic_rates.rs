//! Rate diagnostics on a random quadratic instance: gap and violation²
//! against ln T / T, and the evaluated rate bounds.
//!
//! ```bash
//! cargo run --release --example quadratic_rates -- 10000
//! ```

use drdga::engine::{run_until, RunConfig};
use drdga::graph::generate_graph_sequence;
use drdga::metrics::{empirical_dual_bound, rate_fit, theorem2_bound, theorem3_bound, BoundConstants, RateTarget};
use drdga::problem::make_quadratic_problem;
use drdga::reference::solve_centralized;

fn main() -> drdga::Result<()> {
    let t_max = std::env::args().nth(1).and_then(|t| t.parse().ok()).unwrap_or(10_000);
    let problem = make_quadratic_problem(5, 3, &[2, 1, 3, 2, 1], 3, 1.0)?;
    let seq = generate_graph_sequence(5, 2, 3);
    let f_star = solve_centralized(&problem, 1e-10)?.f_star;
    let q = RunConfig::min_q(&problem);
    let out = run_until(&problem, &seq, &RunConfig::new(q, t_max, 1e-300), Some(f_star))?;

    println!("{:>6} {:>12} {:>12} {:>12}", "T", "gap", "violation^2", "ln T / T");
    let mut t = 10;
    while t <= t_max {
        let r = &out.rows[t - 1];
        let lt = (t as f64).ln() / t as f64;
        println!(
            "{t:>6} {:>12.4e} {:>12.4e} {lt:>12.4e}",
            r.gap,
            r.violation * r.violation
        );
        t *= 10;
    }

    let tail: Vec<_> = out.rows.iter().filter(|r| r.t >= 100).copied().collect();
    for (name, which) in [("gap", RateTarget::Gap), ("violation^2", RateTarget::ViolationSquared)] {
        let fit = rate_fit(&tail, which)?;
        println!("{name}: c_hat = {:.4e}, max_ratio = {:.3}", fit.c_hat, fit.max_ratio);
    }

    let d = empirical_dual_bound(&out.rows);
    let c = BoundConstants::new(&problem, q, seq.window(), 0.0, d);
    println!("D = {d:.4}, delta = {:.3e}, 1 - eta = {:.3e}", c.delta, c.one_minus_eta);
    println!(
        "bounds at T = {t_max}: gap <= {:.3e}, violation^2 <= {:.3e}",
        theorem2_bound(t_max, &c),
        theorem3_bound(t_max, &c)
    );
    Ok(())
}
