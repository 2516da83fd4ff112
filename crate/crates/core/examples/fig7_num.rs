//! The three-source, two-link NUM instance: reference solution, one DRDGA
//! run and how far the terminal rates land from x*.
//!
//! ```bash
//! cargo run --release --example fig7_num
//! ```

use drdga::engine::{run_until, RunConfig};
use drdga::graph::generate_graph_sequence;
use drdga::problem::{fig7_routing, make_num_problem};
use drdga::reference::solve_centralized;

fn main() -> drdga::Result<()> {
    let (routing, caps) = fig7_routing();
    let gamma = std::env::args().nth(1).and_then(|g| g.parse().ok()).unwrap_or(1.0);
    let problem = make_num_problem(&routing, &caps, &[gamma; 3])?;
    let reference = solve_centralized(&problem, 1e-9)?;
    println!("gamma = {gamma}");
    println!("x* = {:?}, F* = {:.6}", flatten(&reference.x), reference.f_star);

    let seq = generate_graph_sequence(3, 1, 7);
    let config = RunConfig::new(RunConfig::min_q(&problem), 5000, 0.01);
    let out = run_until(&problem, &seq, &config, Some(reference.f_star))?;

    for row in out.rows.iter().filter(|r| [1, 10, 70, 200, 1000, 5000].contains(&r.t)) {
        println!(
            "t = {:>4}  gap = {:>10.4}  violation = {:.4}  disagreement = {:.2e}",
            row.t, row.gap, row.violation, row.disagreement
        );
    }
    println!("stop: {} after {} rounds", out.stop_reason.as_str(), out.state.t());
    println!("terminal x = {:?}", flatten(out.state.x()));
    println!("terminal lambda_1 = {:?}", out.state.lambda()[0].as_slice());
    Ok(())
}

fn flatten(xs: &[drdga::linalg::Vector]) -> Vec<f64> {
    xs.iter().flat_map(|x| x.iter().copied()).collect()
}
