use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use drdga::cli::{load_experiment, run_experiment, summary_path, Algorithm, Overrides};
use drdga::reference::solve_centralized;
use drdga::Error;

#[derive(Parser)]
#[command(version, about = "Push-sum regularized dual gradient experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its metrics CSV plus a `.summary` sidecar.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// drdga or cdda.
        #[arg(long)]
        algorithm: Option<String>,
        /// Replaces the graph seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        tmax: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Solve the config's problem centrally and print x*, F*, λ* and the violation.
    Reference {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::Run {
            config,
            out,
            algorithm,
            seed,
            tmax,
            epsilon,
        } => {
            let overrides = Overrides {
                algorithm: algorithm.as_deref().map(str::parse::<Algorithm>).transpose()?,
                seed,
                t_max: tmax,
                epsilon,
            };
            let summary = run_experiment(&config, &out, &overrides)?;
            println!(
                "{} after {} rounds; wrote {} and {}",
                summary.stop_reason.as_str(),
                summary.terminal_round,
                out.display(),
                summary_path(&out).display()
            );
        }
        Command::Reference { config, tol } => {
            let experiment = load_experiment(&config, &Overrides::default())?;
            let sol = solve_centralized(&experiment.problem, tol)?;
            for (i, x) in sol.x.iter().enumerate() {
                println!("x*[{}] = {:?}", i + 1, x.as_slice());
            }
            println!("F* = {:.12e}", sol.f_star);
            println!("lambda* = {:?}", sol.lambda.as_slice());
            println!("violation = {:.3e}", sol.violation);
        }
    }
    Ok(())
}
