//! Command-line front end.
//!
//! Subcommands: `audit`, `solve`, `evolve`, `study`, `table1`. Every run
//! writes a `manifest.cfg` echoing the fully-resolved configuration into the
//! output directory; re-running from the manifest reproduces the artifacts
//! byte for byte.
//!
//! Exit codes: 0 success; 2 a definite assumption violation from `audit`;
//! 3 a non-existence verdict from `solve`; 64 unusable invocation or
//! malformed configuration; 65 a well-formed configuration that cannot be
//! run (empty schedule, missing eigentriple, regime violations, numerical
//! failure). The `GROWFRAG_OUTDIR` environment variable overrides
//! `output.dir`; `--out` overrides both.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::audit;
use crate::config::{self, ConfigError, InitialData, RunConfig};
use crate::evolution;
use crate::grid::Grid;
use crate::operator::{assemble_direct, TruncationParams};
use crate::oracles;
use crate::problem::{linear_tau_problem, ProblemSpec};
use crate::report::{self, SolveSummary, SCHEMA_VERSION};
use crate::solver::{
    self, continuation_solve, order_study, solve_truncated, EigenTriple, Schedule, StageSpec,
    Verdict,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_AUDIT_VIOLATION: i32 = 2;
pub const EXIT_NON_EXISTENCE: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_CONFIG: i32 = 65;

const USAGE: &str = "\
usage: growfrag <command> [<config>] [options]

commands:
  audit  <config>    verify the standing assumptions, write audit.json
  solve  <config>    continuation eigensolve, write eigentriple.csv + summary.json
  evolve <config>    time evolution with entropy monitoring
  study  <config>    grid-refinement and schedule studies (CSV tables)
  table1 [<config>]  solve the explicit linear-growth rows, print deviations

options:
  --out <dir>          output directory (overrides config and GROWFRAG_OUTDIR)
  --export-operator    also write the assembled operator as coordinate text
";

/// Entry point for the thin binary; returns the process exit code.
pub fn run(args: &[String]) -> i32 {
    let mut positional = Vec::new();
    let mut out_override: Option<PathBuf> = None;
    let mut export_operator = false;
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "--out" => match it.next() {
                Some(dir) => out_override = Some(PathBuf::from(dir)),
                None => return usage("--out needs a directory"),
            },
            "--export-operator" => export_operator = true,
            "--help" | "-h" => {
                println!("{USAGE}");
                return EXIT_OK;
            }
            flag if flag.starts_with('-') => return usage(&format!("unknown option {flag}")),
            _ => positional.push(arg.clone()),
        }
    }
    let Some(command) = positional.first() else {
        return usage("missing command");
    };

    let config = match (command.as_str(), positional.get(1)) {
        ("table1", None) => match config::parse_config(TABLE1_DEFAULT_CONFIG) {
            Ok(c) => c,
            Err(e) => return config_exit(e),
        },
        (_, Some(path)) => match config::load_config(Path::new(path)) {
            Ok(c) => c,
            Err(e) => return config_exit(e),
        },
        (_, None) => return usage("missing config file"),
    };
    if positional.len() > 2 {
        return usage("too many arguments");
    }

    let out_dir = out_override.unwrap_or_else(|| config.output_dir.clone());
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!(
            "growfrag: cannot create output directory {}: {e}",
            out_dir.display()
        );
        return EXIT_CONFIG;
    }
    if let Err(e) = std::fs::write(out_dir.join("manifest.cfg"), config.manifest()) {
        eprintln!("growfrag: cannot write manifest: {e}");
        return EXIT_CONFIG;
    }
    warn_tabulated_extrapolation(&config);

    match command.as_str() {
        "audit" => cmd_audit(&config, &out_dir),
        "solve" => cmd_solve(&config, &out_dir, export_operator),
        "evolve" => cmd_evolve(&config, &out_dir),
        "study" => cmd_study(&config, &out_dir),
        "table1" => cmd_table1(&config, &out_dir),
        other => usage(&format!("unknown command {other}")),
    }
}

fn usage(message: &str) -> i32 {
    eprintln!("growfrag: {message}\n{USAGE}");
    EXIT_USAGE
}

/// Tabulated rates extrapolate by their nearest sample; say so whenever the
/// run reaches beyond the measured range.
fn warn_tabulated_extrapolation(config: &RunConfig) {
    for (name, rate) in [("tau", &config.problem.tau), ("beta", &config.problem.beta)] {
        if let crate::problem::RateKind::Tabulated { xs, .. } = rate.kind() {
            let hi = xs.last().copied().unwrap_or(0.0);
            if config.grid_r > hi {
                eprintln!(
                    "growfrag: warning: {name} is tabulated up to {hi} but the domain \
                     reaches {}; using constant extrapolation beyond the table",
                    config.grid_r
                );
            }
        }
    }
}

fn config_exit(e: ConfigError) -> i32 {
    eprintln!("growfrag: {e}");
    match e {
        // a well-formed file describing an impossible model is a config
        // error, everything else is usage-class
        ConfigError::Model(_) => EXIT_CONFIG,
        _ => EXIT_USAGE,
    }
}

fn cmd_audit(config: &RunConfig, out_dir: &Path) -> i32 {
    let probe = audit::default_probe(&config.problem);
    let report = audit::audit(&config.problem, &probe);
    print!("{}", report::audit_table(&report));
    if let Err(e) = report::write_audit_json(&out_dir.join("audit.json"), &report) {
        eprintln!("growfrag: cannot write audit.json: {e}");
        return EXIT_CONFIG;
    }
    if report.all_pass_or_inconclusive() {
        EXIT_OK
    } else {
        eprintln!(
            "growfrag: definite violations: {}",
            report.definite_violations().join(", ")
        );
        EXIT_AUDIT_VIOLATION
    }
}

/// Stage list ending exactly at the configured `(R, N, eta)`.
fn schedule_from(config: &RunConfig) -> Schedule {
    let k = config.schedule_stages.max(1);
    let stages = (0..k)
        .map(|i| {
            let back = (k - 1 - i) as i32;
            StageSpec {
                radius: config.grid_r / config.r_growth.powi(back),
                eta: config.eta / config.eta_decay.powi(back),
                n_cells: ((config.grid_n as f64) / config.r_growth.powi(back))
                    .round()
                    .max(32.0) as usize,
            }
        })
        .collect();
    Schedule {
        stages,
        grid_kind: config.grid_kind,
    }
}

fn cmd_solve(config: &RunConfig, out_dir: &Path, export_operator: bool) -> i32 {
    if config.schedule_stages == 0 {
        eprintln!("growfrag: empty schedule");
        return EXIT_CONFIG;
    }
    let probe = audit::default_probe(&config.problem);
    let audit_report = audit::audit(&config.problem, &probe);
    let violations: Vec<String> = audit_report
        .definite_violations()
        .iter()
        .map(|s| s.to_string())
        .collect();
    if !violations.is_empty() {
        eprintln!(
            "growfrag: audit violations ({}); {}",
            violations.join(", "),
            if config.require_audit {
                "aborting (solver.require_audit = true)"
            } else {
                "continuing, the solve may detect non-existence"
            }
        );
        if config.require_audit {
            let _ = report::write_audit_json(&out_dir.join("audit.json"), &audit_report);
            return EXIT_AUDIT_VIOLATION;
        }
    }

    let schedule = schedule_from(config);
    let result = match continuation_solve(&config.problem, &schedule, &config.solver) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("growfrag: solve failed: {e}");
            return EXIT_CONFIG;
        }
    };

    let Some(last) = result.stages.last() else {
        eprintln!("growfrag: no stage completed");
        return EXIT_CONFIG;
    };

    // rebuild the final-stage operator for the bound diagnostics
    let grid = match Grid::on_interval(
        config.problem.x_min(),
        last.radius,
        last.n_cells,
        config.grid_kind,
    ) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("growfrag: {e}");
            return EXIT_CONFIG;
        }
    };
    let trunc = TruncationParams::standard(&config.problem, &grid, last.eta);
    let op = match assemble_direct(&config.problem, &grid, &trunc) {
        Ok(op) => op,
        Err(e) => {
            eprintln!("growfrag: {e}");
            return EXIT_CONFIG;
        }
    };
    let bounds = solver::verify_bounds(&last.triple, &op);

    let summary = SolveSummary {
        schema_version: SCHEMA_VERSION,
        lambda: last.lambda,
        lambda_adjoint: last.triple.lambda_adjoint,
        extrapolated_lambda: result.extrapolated_lambda,
        residual_direct: last.triple.residual_direct,
        residual_dual: last.triple.residual_dual,
        support_infimum_m: last.triple.support_infimum_m,
        iterations: last.triple.iterations,
        contraction_ratio: last.triple.contraction_ratio,
        verdict: result.verdict,
        observed_order: result.observed_order,
        lambda_positive_radius: result.lambda_positive_radius,
        bounds: &bounds,
        audit_violations: violations,
        stages: report::stage_summaries(&result),
    };

    let io_result = (|| -> std::io::Result<()> {
        report::write_eigentriple_csv(&out_dir.join("eigentriple.csv"), &grid, &last.triple)?;
        report::write_stages_csv(&out_dir.join("stages.csv"), &result)?;
        report::write_json(&out_dir.join("summary.json"), &summary)?;
        if export_operator {
            let mut f =
                std::io::BufWriter::new(std::fs::File::create(out_dir.join("operator.coo"))?);
            op.export_coo(&mut f)?;
        }
        Ok(())
    })();
    if let Err(e) = io_result {
        eprintln!("growfrag: cannot write artifacts: {e}");
        return EXIT_CONFIG;
    }

    println!(
        "lambda = {} (extrapolated {}), verdict {:?}, m = {}",
        last.lambda, result.extrapolated_lambda, result.verdict, last.triple.support_infimum_m
    );
    match result.verdict {
        Verdict::Converged => EXIT_OK,
        Verdict::DivergingFirstMoment | Verdict::LambdaNotSettling => EXIT_NON_EXISTENCE,
    }
}

#[derive(Debug, Serialize)]
struct EvolveSummary {
    schema_version: u32,
    lambda: f64,
    entropy_initial: f64,
    entropy_final: f64,
    entropy_ratio: f64,
    threshold: f64,
    max_entropy_violation: f64,
    max_pairing_drift: f64,
    dt: f64,
    steps: usize,
}

fn cmd_evolve(config: &RunConfig, out_dir: &Path) -> i32 {
    let grid = match Grid::on_interval(
        config.problem.x_min(),
        config.grid_r,
        config.grid_n,
        config.grid_kind,
    ) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("growfrag: {e}");
            return EXIT_CONFIG;
        }
    };

    let triple = if config.evolve.solve_inline {
        let trunc = TruncationParams::standard(&config.problem, &grid, config.eta);
        let op = match assemble_direct(&config.problem, &grid, &trunc) {
            Ok(op) => op,
            Err(e) => {
                eprintln!("growfrag: {e}");
                return EXIT_CONFIG;
            }
        };
        match solve_truncated(&op, &op.adjoint(), &config.solver) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("growfrag: inline solve failed: {e}");
                return EXIT_CONFIG;
            }
        }
    } else {
        match read_eigentriple(out_dir, &grid) {
            Some(t) => t,
            None => {
                eprintln!(
                    "growfrag: no usable eigentriple.csv/summary.json in {} and \
                     evolve.solve_inline = false",
                    out_dir.display()
                );
                return EXIT_CONFIG;
            }
        }
    };

    let u0 = initial_data(config, &grid, &triple);
    let traj = match evolution::evolve_monitored(
        &config.problem,
        &grid,
        &u0,
        config.evolve.t_final,
        config.evolve.cfl,
        Some(&triple),
        config.stride,
    ) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("growfrag: evolution failed: {e}");
            return EXIT_CONFIG;
        }
    };

    let h0 = traj.entropy_series.first().map(|(_, h)| *h).unwrap_or(0.0);
    let h_end = traj.entropy_series.last().map(|(_, h)| *h).unwrap_or(0.0);
    let ratio = if h0 > 0.0 { h_end / h0 } else { 0.0 };
    let summary = EvolveSummary {
        schema_version: SCHEMA_VERSION,
        lambda: triple.lambda,
        entropy_initial: h0,
        entropy_final: h_end,
        entropy_ratio: ratio,
        threshold: config.evolve.threshold,
        max_entropy_violation: traj.max_entropy_violation(),
        max_pairing_drift: traj.max_pairing_drift(),
        dt: traj.dt,
        steps: traj.steps,
    };
    let io_result = (|| -> std::io::Result<()> {
        report::write_trajectory_csv(&out_dir.join("trajectory.csv"), &grid, &traj)?;
        report::write_entropy_csv(&out_dir.join("entropy.csv"), &traj)?;
        report::write_json(&out_dir.join("evolve.json"), &summary)
    })();
    if let Err(e) = io_result {
        eprintln!("growfrag: cannot write artifacts: {e}");
        return EXIT_CONFIG;
    }

    println!(
        "H(T)/H(0) = {ratio:e} over T = {} ({} steps, dt = {})",
        config.evolve.t_final, traj.steps, traj.dt
    );
    if ratio < config.evolve.threshold {
        EXIT_OK
    } else {
        eprintln!(
            "growfrag: entropy ratio {ratio:e} above threshold {:e}",
            config.evolve.threshold
        );
        1
    }
}

fn initial_data(config: &RunConfig, grid: &Grid, triple: &EigenTriple) -> Vec<f64> {
    use rand::prelude::*;
    match config.evolve.u0 {
        InitialData::Gaussian => {
            let c = config.evolve.u0_center;
            let w = config.evolve.u0_width.max(grid.max_width());
            grid.sample(|x| (-(x - c) * (x - c) / (w * w)).exp())
        }
        InitialData::Random => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.evolve.seed);
            (0..grid.n_cells())
                .map(|_| 0.05 + rng.random::<f64>())
                .collect()
        }
        InitialData::Eigen => triple.u.clone(),
        InitialData::Flat => vec![1.0; grid.n_cells()],
    }
}

/// Reads a previously written triple back; the x column must match the grid.
fn read_eigentriple(dir: &Path, grid: &Grid) -> Option<EigenTriple> {
    let text = std::fs::read_to_string(dir.join("eigentriple.csv")).ok()?;
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).ok()?).ok()?;
    let lambda = summary.get("lambda")?.as_f64()?;
    let lambda_adjoint = summary
        .get("lambda_adjoint")
        .and_then(|v| v.as_f64())
        .unwrap_or(lambda);
    let support_infimum_m = summary
        .get("support_infimum_m")
        .and_then(|v| v.as_f64())
        .unwrap_or(0.0);

    let mut u = Vec::new();
    let mut phi = Vec::new();
    let mut tau_u = Vec::new();
    for (i, line) in text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with('x'))
        .enumerate()
    {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return None;
        }
        let x: f64 = cols[0].parse().ok()?;
        if (x - grid.centers().get(i).copied()?).abs() > 1e-9 * grid.radius() {
            return None;
        }
        u.push(cols[1].parse().ok()?);
        phi.push(cols[2].parse().ok()?);
        tau_u.push(cols[3].parse().ok()?);
    }
    if u.len() != grid.n_cells() {
        return None;
    }
    Some(EigenTriple {
        lambda,
        lambda_adjoint,
        u,
        phi,
        tau_u,
        support_infimum_m,
        residual_direct: f64::NAN,
        residual_dual: f64::NAN,
        dual_growth: solver::DualGrowthFit {
            k: 1.0,
            theta: 0.0,
            c: 0.0,
        },
        iterations: 0,
        contraction_ratio: None,
    })
}

#[derive(Debug, Serialize)]
struct StudySummary {
    schema_version: u32,
    fitted_order: Option<f64>,
    verdict: Verdict,
    extrapolated_lambda: f64,
    sweep: Option<Vec<(f64, f64)>>,
}

fn cmd_study(config: &RunConfig, out_dir: &Path) -> i32 {
    if config.study_grids.is_empty() || config.schedule_stages == 0 {
        eprintln!("growfrag: empty study grids or schedule");
        return EXIT_CONFIG;
    }

    // mesh refinement and the truncation schedule run concurrently
    let (study, continuation) = rayon::join(
        || {
            order_study(
                &config.problem,
                config.grid_r,
                &config.study_grids,
                config.study_eta_per_dx,
                None,
                &config.solver,
            )
        },
        || continuation_solve(&config.problem, &schedule_from(config), &config.solver),
    );
    let study = match study {
        Ok(s) => s,
        Err(e) => {
            eprintln!("growfrag: grid study failed: {e}");
            return EXIT_CONFIG;
        }
    };
    let continuation = match continuation {
        Ok(c) => c,
        Err(e) => {
            eprintln!("growfrag: schedule study failed: {e}");
            return EXIT_CONFIG;
        }
    };

    let sweep = config.study_sweep.as_ref().map(|(_, values)| {
        values
            .par_iter()
            .map(|&r| {
                let problem = ProblemSpec::new(
                    config.problem.tau.clone(),
                    config.problem.beta.clone(),
                    crate::problem::KernelSpec::mitosis(r).expect("sweep r in [0, 1/2]"),
                );
                let spec = StageSpec {
                    radius: config.grid_r,
                    eta: config.eta,
                    n_cells: config.grid_n,
                };
                let grid =
                    Grid::on_interval(problem.x_min(), spec.radius, spec.n_cells, config.grid_kind)
                        .expect("sweep grid");
                let trunc = TruncationParams::standard(&problem, &grid, spec.eta);
                let lambda = assemble_direct(&problem, &grid, &trunc)
                    .ok()
                    .and_then(|op| solve_truncated(&op, &op.adjoint(), &config.solver).ok())
                    .map(|t| t.lambda)
                    .unwrap_or(f64::NAN);
                (r, lambda)
            })
            .collect::<Vec<_>>()
    });

    let summary = StudySummary {
        schema_version: SCHEMA_VERSION,
        fitted_order: study.fitted_order,
        verdict: continuation.verdict,
        extrapolated_lambda: continuation.extrapolated_lambda,
        sweep: sweep.clone(),
    };
    let io_result = (|| -> std::io::Result<()> {
        report::write_order_csv(&out_dir.join("study_grid.csv"), &study)?;
        report::write_stages_csv(&out_dir.join("study_stages.csv"), &continuation)?;
        if let Some(rows) = &sweep {
            use std::io::Write;
            let mut f =
                std::io::BufWriter::new(std::fs::File::create(out_dir.join("study_sweep.csv"))?);
            writeln!(f, "# growfrag-sweep v{SCHEMA_VERSION}")?;
            writeln!(f, "r,lambda")?;
            for (r, lambda) in rows {
                writeln!(f, "{r},{lambda}")?;
            }
        }
        report::write_json(&out_dir.join("study.json"), &summary)
    })();
    if let Err(e) = io_result {
        eprintln!("growfrag: cannot write artifacts: {e}");
        return EXIT_CONFIG;
    }
    println!(
        "observed order {:?}, schedule verdict {:?}",
        study.fitted_order, continuation.verdict
    );
    EXIT_OK
}

const TABLE1_DEFAULT_CONFIG: &str = "
tau.kind = power_law
tau.coeffs = 1.0, 1.0
beta.kind = power_law
beta.coeffs = 1.0, 1.0
kernel.kind = uniform
grid.r = 20.0
grid.n = 2000
";

/// Acceptance thresholds of the explicit rows.
const TABLE1_LAMBDA_TOL: f64 = 1e-2;
const TABLE1_L1_TOL: f64 = 1e-2;
const TABLE1_SLOPE_TOL: f64 = 2e-2;

#[derive(Debug, Serialize)]
struct Table1Row {
    n: u32,
    lambda: f64,
    lambda_error: f64,
    u_l1_error: f64,
    phi_slope: f64,
    phi_slope_exact: f64,
    phi_slope_rel_error: f64,
}

fn cmd_table1(config: &RunConfig, out_dir: &Path) -> i32 {
    let rows: Vec<Result<Table1Row, String>> = (1..=3u32)
        .into_par_iter()
        .map(|n| table1_row(config, n).map_err(|e| format!("row n = {n}: {e}")))
        .collect();

    let mut table = Vec::new();
    for row in rows {
        match row {
            Ok(r) => table.push(r),
            Err(e) => {
                eprintln!("growfrag: {e}");
                return EXIT_CONFIG;
            }
        }
    }

    let io_result = (|| -> std::io::Result<()> {
        use std::io::Write;
        let mut f = std::io::BufWriter::new(std::fs::File::create(out_dir.join("table1.csv"))?);
        writeln!(f, "# growfrag-table1 v{SCHEMA_VERSION}")?;
        writeln!(
            f,
            "n,lambda,lambda_error,u_l1_error,phi_slope,phi_slope_exact,phi_slope_rel_error"
        )?;
        for r in &table {
            writeln!(
                f,
                "{},{},{},{},{},{},{}",
                r.n,
                r.lambda,
                r.lambda_error,
                r.u_l1_error,
                r.phi_slope,
                r.phi_slope_exact,
                r.phi_slope_rel_error
            )?;
        }
        Ok(())
    })();
    if let Err(e) = io_result {
        eprintln!("growfrag: cannot write artifacts: {e}");
        return EXIT_CONFIG;
    }

    let mut ok = true;
    for r in &table {
        let pass = r.lambda_error.abs() <= TABLE1_LAMBDA_TOL
            && r.u_l1_error <= TABLE1_L1_TOL
            && r.phi_slope_rel_error.abs() <= TABLE1_SLOPE_TOL;
        ok &= pass;
        println!(
            "n = {}: lambda err {:+.3e}, u L1 err {:.3e}, phi slope err {:+.3e} [{}]",
            r.n,
            r.lambda_error,
            r.u_l1_error,
            r.phi_slope_rel_error,
            if pass { "ok" } else { "FAIL" }
        );
    }
    let max_l = table
        .iter()
        .map(|r| r.lambda_error.abs())
        .fold(0.0, f64::max);
    let max_u = table.iter().map(|r| r.u_l1_error).fold(0.0, f64::max);
    let max_s = table
        .iter()
        .map(|r| r.phi_slope_rel_error.abs())
        .fold(0.0, f64::max);
    println!("max deviations: lambda {max_l:.3e}, u L1 {max_u:.3e}, phi slope {max_s:.3e}");
    if ok {
        EXIT_OK
    } else {
        1
    }
}

fn table1_row(config: &RunConfig, n: u32) -> Result<Table1Row, String> {
    let problem = linear_tau_problem(1.0, 1.0, n);
    let grid = Grid::uniform(config.grid_r, config.grid_n).map_err(|e| e.to_string())?;
    let trunc = TruncationParams::standard(&problem, &grid, config.eta);
    let op = assemble_direct(&problem, &grid, &trunc).map_err(|e| e.to_string())?;
    let triple = solve_truncated(&op, &op.adjoint(), &config.solver).map_err(|e| e.to_string())?;
    let oracle = oracles::example_linear_tau(1.0, 1.0, n).map_err(|e| e.to_string())?;

    let u_l1_error: f64 = grid
        .centers()
        .iter()
        .zip(&triple.u)
        .zip(grid.widths())
        .map(|((&x, u), w)| (u - oracle.u(x)).abs() * w)
        .sum();
    // least-squares slope through the origin over the mid-range
    let (mut num, mut den) = (0.0, 0.0);
    for (&x, p) in grid.centers().iter().zip(&triple.phi) {
        if x >= grid.radius() / 20.0 && x <= grid.radius() / 2.0 {
            num += x * p;
            den += x * x;
        }
    }
    let phi_slope = num / den;
    let phi_slope_exact = oracle.phi(1.0);
    Ok(Table1Row {
        n,
        lambda: triple.lambda,
        lambda_error: triple.lambda - oracle.lambda,
        u_l1_error,
        phi_slope,
        phi_slope_exact,
        phi_slope_rel_error: (phi_slope - phi_slope_exact) / phi_slope_exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_error_for_unknown_command() {
        assert_eq!(run(&["frobnicate".into(), "x.cfg".into()]), EXIT_USAGE);
    }

    #[test]
    fn usage_error_for_missing_config() {
        assert_eq!(run(&["solve".into()]), EXIT_USAGE);
    }

    #[test]
    fn missing_file_is_usage_error() {
        assert_eq!(
            run(&["audit".into(), "/nonexistent/path.cfg".into()]),
            EXIT_USAGE
        );
    }
}
