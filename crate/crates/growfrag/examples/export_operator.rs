//! Dumps a small assembled operator in coordinate text form, the format the
//! CLI writes behind `solve --export-operator`.
//!
//! ```bash
//! cargo run --release --example export_operator
//! ```

use growfrag::operator::assemble_direct;
use growfrag::problem::linear_beta_problem;
use growfrag::{Grid, TruncationParams};

fn main() {
    let problem = linear_beta_problem(1.0, 1.0);
    let grid = Grid::uniform(4.0, 8).unwrap();
    let trunc = TruncationParams::standard(&problem, &grid, 1e-3);
    let op = assemble_direct(&problem, &grid, &trunc).unwrap();

    let mut buf = Vec::new();
    op.export_coo(&mut buf).unwrap();
    print!("{}", String::from_utf8(buf).unwrap());

    let adj = op.adjoint();
    println!("# adjoint of the same assembly:");
    let mut buf = Vec::new();
    adj.export_coo(&mut buf).unwrap();
    print!("{}", String::from_utf8(buf).unwrap());
}
