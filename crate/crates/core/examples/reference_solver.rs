//! Centralized solutions for the bundled problem families, including an
//! infeasible instance the solver rejects.
//!
//! ```bash
//! cargo run --release --example reference_solver
//! ```

use drdga::linalg::{Matrix, Vector};
use drdga::problem::{
    fig7_routing, make_num_problem, make_quadratic_problem, AgentProblem, CoupledProblem, ObjectiveSpec,
};
use drdga::reference::{solve_centralized, solve_centralized_with};

fn main() -> drdga::Result<()> {
    let (routing, caps) = fig7_routing();
    let cases = [
        ("fig7 NUM", make_num_problem(&routing, &caps, &[1.0; 3])?),
        (
            "quadratic m=5 p=3",
            make_quadratic_problem(5, 3, &[2, 1, 3, 2, 1], 3, 1.0)?,
        ),
    ];
    for (name, problem) in &cases {
        let sol = solve_centralized(problem, 1e-9)?;
        println!(
            "{name}: F* = {:.6}, violation = {:.2e}, iterations = {}",
            sol.f_star, sol.violation, sol.iterations
        );
        println!("  lambda* = {:.4?}", sol.lambda.as_slice());
    }

    // x ∈ [0, 1] cannot satisfy x = 5
    let agent = AgentProblem::new(
        ObjectiveSpec::DiagonalQuadratic {
            diag: Vector::from_element(1, 1.0),
            lin: Vector::zeros(1),
        },
        Vector::zeros(1),
        Vector::from_element(1, 1.0),
        Matrix::from_element(1, 1, 1.0),
        Vector::from_element(1, 5.0),
        1.0,
        1.0,
    )?;
    match solve_centralized_with(&CoupledProblem::new(vec![agent])?, 1e-9, 100_000) {
        Ok(sol) => println!("infeasible case unexpectedly solved: {sol:?}"),
        Err(e) => println!("infeasible case: {e}"),
    }
    Ok(())
}
