//! Cross-checks the iterative eigensolver against the dense-spectrum
//! reference at desk scale: every eigenvalue of the assembled operator is
//! computed by an independent decomposition and the Perron pair compared.
//!
//! ```bash
//! cargo run --release --example dense_oracle_check
//! ```

use growfrag::operator::assemble_direct;
use growfrag::oracles::dense_spectrum;
use growfrag::problem::linear_beta_problem;
use growfrag::{solve_truncated, Grid, SolverConfig, TruncationParams};

fn main() {
    let problem = linear_beta_problem(1.0, 1.0);
    for n in [50usize, 100, 200] {
        let grid = Grid::uniform(12.0, n).unwrap();
        let trunc = TruncationParams::standard(&problem, &grid, 1e-3);
        let op = assemble_direct(&problem, &grid, &trunc).unwrap();

        let triple = solve_truncated(&op, &op.adjoint(), &SolverConfig::default()).unwrap();
        let spectrum = dense_spectrum(&op).unwrap();

        let l1: f64 = triple
            .u
            .iter()
            .zip(&spectrum.perron_vector)
            .zip(grid.widths())
            .map(|((a, b), w)| (a - b).abs() * w)
            .sum();
        println!(
            "N = {n:4}: iterative lambda {:.12}, dense Perron {:.12}, |diff| {:.1e}, u L1 {:.1e}",
            triple.lambda,
            spectrum.perron_value,
            (triple.lambda - spectrum.perron_value).abs(),
            l1
        );
        let trailing: Vec<String> = spectrum.eigenvalues[..4]
            .iter()
            .map(|(re, im)| format!("{re:.4}{im:+.4}i"))
            .collect();
        println!("          leading spectrum: {}", trailing.join(", "));
    }
}
