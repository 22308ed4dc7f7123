//! Principal eigenelements of growth-fragmentation equations.
//!
//! The crate computes the leading eigentriple `(lambda, u, phi)` of the
//! size-structured growth-fragmentation operator for general growth rates,
//! fragmentation rates and self-similar fragmentation kernels, including
//! growth rates that vanish at size zero. The eigenproblem is regularised on
//! a truncated domain (radius `R`, growth floor `eta`, boundary inflow
//! `delta = mu_inf / 2R`), discretised by a positivity-preserving upwind
//! finite-volume scheme with exact per-column kernel masses, and solved by
//! shifted inverse power iteration on the resulting M-matrix. Continuation
//! over a schedule of growing radii and shrinking floors recovers the
//! untruncated eigenvalue or detects that none exists. A forward-Euler
//! integrator verifies the long-time asymptotics through the
//! relative-entropy distance to the eigenprofile.
//!
//! Run `cargo run --example solve_linear_growth` (or any other example) for
//! a guided tour; the `growfrag` binary exposes the same machinery behind
//! `audit`, `solve`, `evolve`, `study` and `table1` subcommands.

// negated comparisons reject NaN alongside the out-of-range values; index
// loops mirror the matrix notation of the assembly
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod audit;
pub mod cli;
pub mod config;
pub mod evolution;
pub mod grid;
pub mod linalg;
pub mod operator;
pub mod oracles;
pub mod problem;
pub mod quadrature;
pub mod report;
pub mod solver;

pub use grid::{Grid, GridKind};
pub use operator::{assemble_adjoint, assemble_direct, DiscreteOperator, TruncationParams};
pub use problem::{KernelKind, KernelSpec, ProblemSpec, RateKind, RateSpec};
pub use solver::{
    continuation_solve, solve_truncated, ContinuationResult, EigenTriple, Schedule, SolverConfig,
    Verdict,
};
