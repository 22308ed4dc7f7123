//! Assumption audits for a healthy model and two models that violate the
//! standing assumptions (renewal kernel, affine growth with constant
//! fragmentation).
//!
//! ```bash
//! cargo run --release --example audit_report
//! ```

use growfrag::audit::{audit, default_probe};
use growfrag::problem::linear_beta_problem;
use growfrag::report::audit_table;
use growfrag::{KernelSpec, ProblemSpec, RateSpec};

fn show(label: &str, problem: &ProblemSpec) {
    let report = audit(problem, &default_probe(problem));
    println!("== {label}");
    print!("{}", audit_table(&report));
    let violations = report.definite_violations();
    if violations.is_empty() {
        println!("   all assumptions satisfied or inconclusive\n");
    } else {
        println!("   definite violations: {}\n", violations.join(", "));
    }
}

fn main() {
    show(
        "constant growth, linear fragmentation, uniform kernel",
        &linear_beta_problem(1.0, 1.0),
    );

    show(
        "renewal kernel (fragments of size zero)",
        &ProblemSpec::new(
            RateSpec::constant(1.0).unwrap(),
            RateSpec::power_law(1.0, 1.0).unwrap(),
            KernelSpec::renewal(),
        ),
    );

    show(
        "affine growth vs constant fragmentation (gelation)",
        &ProblemSpec::new(
            RateSpec::affine(1.0, 2.0).unwrap(),
            RateSpec::constant(3.0).unwrap(),
            KernelSpec::uniform(),
        ),
    );
}
