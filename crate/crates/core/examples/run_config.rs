//! Runs a config file end to end, writing the metrics CSV and summary the
//! same way the `drdga run` binary does.
//!
//! ```bash
//! cargo run --release --example run_config -- crates/core/configs/fig7.cfg /tmp/fig7.csv
//! ```

use std::path::PathBuf;
use std::process::ExitCode;

use drdga::cli::{run_experiment, summary_path, Overrides};

fn main() -> ExitCode {
    let mut args = std::env::args().skip(1);
    let config = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/fig7.cfg"));
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("drdga_run.csv"));

    match run_experiment(&config, &out, &Overrides::default()) {
        Ok(summary) => {
            print!("{}", summary.to_text());
            println!("csv: {}\nsummary: {}", out.display(), summary_path(&out).display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
