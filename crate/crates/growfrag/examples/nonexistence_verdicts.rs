//! Two rate combinations whose eigenproblem has no solution, and how the
//! continuation detects each: constant fragmentation against affine growth
//! makes the first moment run away with the radius; growth vanishing at the
//! origin with mismatched slopes leaves the eigenvalue drifting.
//!
//! ```bash
//! cargo run --release --example nonexistence_verdicts
//! ```

use growfrag::{continuation_solve, KernelSpec, ProblemSpec, RateSpec, Schedule, SolverConfig};

fn show(label: &str, problem: &ProblemSpec) {
    let schedule = Schedule::geometric(10.0, 200, 1e-2, 4, 2.0, 0.5);
    let result = continuation_solve(problem, &schedule, &SolverConfig::default()).unwrap();
    println!("== {label}");
    println!("   R        lambda       int x u");
    for s in &result.stages {
        println!("{:7.1}  {:.8}  {:.5e}", s.radius, s.lambda, s.first_moment);
    }
    println!("verdict: {:?}\n", result.verdict);
}

fn main() {
    // tau = 1 + x, beta = 1: the stationary first moment would have to be
    // tau0/(beta0 - tau1), which is no longer positive
    show(
        "affine growth, constant fragmentation (tau1 >= beta0)",
        &ProblemSpec::new(
            RateSpec::affine(1.0, 1.0).unwrap(),
            RateSpec::constant(1.0).unwrap(),
            KernelSpec::uniform(),
        ),
    );

    // tau = 2x, beta = 1: no integrable eigenprofile exists; the truncated
    // eigenvalue never stops moving with the radius
    show(
        "growth vanishing at zero, mismatched slopes (tau1 != beta0)",
        &ProblemSpec::new(
            RateSpec::power_law(2.0, 1.0).unwrap(),
            RateSpec::constant(1.0).unwrap(),
            KernelSpec::uniform(),
        ),
    );
}
