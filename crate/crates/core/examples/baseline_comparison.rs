//! DRDGA against the doubly stochastic dual decomposition baseline on a
//! random NUM network, same graphs and step schedule.
//!
//! ```bash
//! cargo run --release --example baseline_comparison -- 20 19 3000
//! ```

use drdga::baseline::run_cdda;
use drdga::engine::{run_until, RunConfig};
use drdga::graph::generate_graph_sequence;
use drdga::problem::make_random_num_problem;
use drdga::reference::solve_centralized;

fn main() -> drdga::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let sources = args.first().copied().unwrap_or(20);
    let links = args.get(1).copied().unwrap_or(19);
    let t_max = args.get(2).copied().unwrap_or(3000);

    let problem = make_random_num_problem(sources, links, 3, 11, 1.0)?;
    let seq = generate_graph_sequence(sources, 2, 11);
    let f_star = solve_centralized(&problem, 1e-9).ok().map(|r| r.f_star);
    let config = RunConfig::new(RunConfig::min_q(&problem), t_max, 1e-300);

    let drdga = run_until(&problem, &seq, &config, f_star)?;
    let cdda = run_cdda(&problem, &seq, &config, f_star)?;

    println!(
        "{:>6} | {:>10} {:>10} | {:>10} {:>10}",
        "t", "drdga viol", "drdga gap", "cdda viol", "cdda gap"
    );
    for (d, c) in drdga.rows.iter().zip(&cdda.rows) {
        if d.t == 1 || d.t % (t_max / 10).max(1) == 0 {
            println!(
                "{:>6} | {:>10.4} {:>10.4} | {:>10.4} {:>10.4}",
                d.t, d.violation, d.gap, c.violation, c.gap
            );
        }
    }
    Ok(())
}
