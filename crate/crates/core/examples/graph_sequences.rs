//! Generates a window-connected directed graph pool, prints its weight
//! matrices and round-trips it through the edge-list format.
//!
//! ```bash
//! cargo run --example graph_sequences -- 4 2 7
//! ```

use drdga::graph::{generate_graph_sequence, is_strongly_connected, verify_window_connectivity, GraphSequence};

fn main() -> drdga::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let m = args.first().copied().unwrap_or(4);
    let window = args.get(1).copied().unwrap_or(2);
    let seed = args.get(2).copied().unwrap_or(7) as u64;

    let seq = generate_graph_sequence(m, window, seed);
    println!("m = {m}, window = {window}, pool of {} rounds", seq.period());
    println!(
        "window-connected over 3 periods: {}",
        verify_window_connectivity(&seq, 3 * seq.period())
    );

    for t in 0..window.min(seq.period()) {
        let edges = seq.edges(t);
        println!(
            "\nround {t}: {} edges, strongly connected alone: {}",
            edges.len(),
            is_strongly_connected(m, edges)
        );
        println!("{:.3}", seq.weight_matrix(t).entries());
    }

    let text = seq.to_edge_list();
    let back = GraphSequence::parse_edge_list(&text, m, window)?;
    let same = (0..seq.period()).all(|t| back.edges(t) == seq.edges(t));
    println!("edge list ({} lines) round-trips: {same}", text.lines().count());
    print!(
        "{}",
        text.lines().take(3).map(|l| format!("  {l}\n")).collect::<String>()
    );
    Ok(())
}
