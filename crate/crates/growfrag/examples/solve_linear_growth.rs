//! Solves the flagship explicit case (constant growth `tau0`, fragmentation
//! `beta0 x`, uniform kernel) and compares the computed triple with the
//! closed form: `lambda = sqrt(beta0 tau0)`, a gamma-type profile for `u`
//! and the affine dual `phi = (1 + X)/2`.
//!
//! ```bash
//! cargo run --release --example solve_linear_growth
//! ```

use growfrag::operator::assemble_direct;
use growfrag::oracles::example_linear_beta;
use growfrag::problem::linear_beta_problem;
use growfrag::solver::verify_bounds;
use growfrag::{solve_truncated, Grid, SolverConfig, TruncationParams};

fn main() {
    let (tau0, beta0) = (1.0, 1.0);
    let problem = linear_beta_problem(tau0, beta0);
    let grid = Grid::uniform(20.0, 1000).unwrap();
    let trunc = TruncationParams::standard(&problem, &grid, 1e-3);
    let op = assemble_direct(&problem, &grid, &trunc).unwrap();
    let triple = solve_truncated(&op, &op.adjoint(), &SolverConfig::default()).unwrap();
    let oracle = example_linear_beta(tau0, beta0).unwrap();

    println!(
        "lambda = {:.8}   closed form {:.8}   error {:+.2e}",
        triple.lambda,
        oracle.lambda,
        triple.lambda - oracle.lambda
    );
    println!(
        "residuals: direct {:.2e}, dual {:.2e};  iterations {}",
        triple.residual_direct, triple.residual_dual, triple.iterations
    );

    let l1: f64 = grid
        .centers()
        .iter()
        .zip(&triple.u)
        .zip(grid.widths())
        .map(|((&x, u), w)| (u - oracle.u(x)).abs() * w)
        .sum();
    println!("L1 distance of u to the closed form: {l1:.3e}");

    let phi_dev = grid
        .centers()
        .iter()
        .zip(&triple.phi)
        .filter(|(&x, _)| x <= 10.0)
        .map(|(&x, p)| ((p - oracle.phi(x)) / oracle.phi(x)).abs())
        .fold(0.0f64, f64::max);
    println!("max relative deviation of phi on [0, 10]: {phi_dev:.3e}");

    let bounds = verify_bounds(&triple, &op);
    println!(
        "bounds: lambda >= max(tau u)/2 = {:.4} ({}), identity gap {:+.2e} vs outflux {:.2e}",
        bounds.half_max_tau_u,
        if bounds.lower_bound_ok {
            "ok"
        } else {
            "violated"
        },
        bounds.identity_gap,
        bounds.boundary_outflux,
    );
    println!(
        "dual growth envelope: phi <= {:.3} x^{} + {:.3}",
        bounds.dual_growth.c, bounds.dual_growth.k, bounds.dual_growth.theta
    );

    println!("\n     x        u(x)      closed u     phi(x)    closed phi");
    for &x in [0.5, 1.0, 2.0, 4.0, 8.0].iter() {
        let j = grid.cell_of(x).unwrap();
        println!(
            "{:7.2} {:11.6} {:11.6} {:11.6} {:11.6}",
            x,
            triple.u[j],
            oracle.u(grid.centers()[j]),
            triple.phi[j],
            oracle.phi(grid.centers()[j])
        );
    }
}
