//! CSV and JSON artifact writers.
//!
//! Every CSV starts with a versioned schema comment so downstream plotting
//! can pin column layouts. Numbers are written with the shortest
//! round-trip formatting, which is bit-stable across runs.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use crate::audit::AssumptionReport;
use crate::evolution::Trajectory;
use crate::grid::Grid;
use crate::solver::{BoundsReport, ContinuationResult, EigenTriple, OrderStudy, Verdict};

pub const SCHEMA_VERSION: u32 = 1;

/// `lambda` and friends for `summary.json`.
#[derive(Debug, Serialize)]
pub struct SolveSummary<'a> {
    pub schema_version: u32,
    pub lambda: f64,
    pub lambda_adjoint: f64,
    pub extrapolated_lambda: f64,
    pub residual_direct: f64,
    pub residual_dual: f64,
    pub support_infimum_m: f64,
    pub iterations: usize,
    pub contraction_ratio: Option<f64>,
    pub verdict: Verdict,
    pub observed_order: Option<f64>,
    pub lambda_positive_radius: Option<f64>,
    pub bounds: &'a BoundsReport,
    pub audit_violations: Vec<String>,
    pub stages: Vec<StageSummary>,
}

#[derive(Debug, Serialize)]
pub struct StageSummary {
    pub radius: f64,
    pub eta: f64,
    pub delta: f64,
    pub n_cells: usize,
    pub lambda: f64,
    pub lambda_refined: f64,
    pub first_moment: f64,
}

pub fn stage_summaries(result: &ContinuationResult) -> Vec<StageSummary> {
    result
        .stages
        .iter()
        .map(|s| StageSummary {
            radius: s.radius,
            eta: s.eta,
            delta: s.delta,
            n_cells: s.n_cells,
            lambda: s.lambda,
            lambda_refined: s.lambda_refined,
            first_moment: s.first_moment,
        })
        .collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)
}

/// `x, u, phi, tau_u` sampled at the cell centers.
pub fn write_eigentriple_csv(path: &Path, grid: &Grid, triple: &EigenTriple) -> io::Result<()> {
    let mut f = io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "# growfrag-eigentriple v{SCHEMA_VERSION}")?;
    writeln!(f, "x,u,phi,tau_u")?;
    for (((x, u), phi), tau_u) in grid
        .centers()
        .iter()
        .zip(&triple.u)
        .zip(&triple.phi)
        .zip(&triple.tau_u)
    {
        writeln!(f, "{x},{u},{phi},{tau_u}")?;
    }
    f.flush()
}

/// Long-format snapshots: `t, x, u`.
pub fn write_trajectory_csv(path: &Path, grid: &Grid, traj: &Trajectory) -> io::Result<()> {
    let mut f = io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "# growfrag-trajectory v{SCHEMA_VERSION}")?;
    writeln!(f, "t,x,u")?;
    for snap in &traj.snapshots {
        for (x, u) in grid.centers().iter().zip(&snap.u) {
            writeln!(f, "{},{x},{u}", snap.t)?;
        }
    }
    f.flush()
}

/// Per-step series: entropy, pairing and the moment ledger.
pub fn write_entropy_csv(path: &Path, traj: &Trajectory) -> io::Result<()> {
    let mut f = io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "# growfrag-entropy v{SCHEMA_VERSION}")?;
    writeln!(f, "t,entropy,pairing,mass,first_moment,beta_mass,tau_mass")?;
    for (i, row) in traj.ledger.iter().enumerate() {
        let entropy = traj.entropy_series.get(i).map(|(_, h)| *h);
        let pairing = traj.pairing_series.get(i).map(|(_, p)| *p);
        writeln!(
            f,
            "{},{},{},{},{},{},{}",
            row.t,
            entropy.map(|v| v.to_string()).unwrap_or_default(),
            pairing.map(|v| v.to_string()).unwrap_or_default(),
            row.mass,
            row.first_moment,
            row.beta_mass,
            row.tau_mass
        )?;
    }
    f.flush()
}

/// Continuation stages: `stage, r, eta, delta, n, lambda, lambda_refined,
/// first_moment`.
pub fn write_stages_csv(path: &Path, result: &ContinuationResult) -> io::Result<()> {
    let mut f = io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "# growfrag-stages v{SCHEMA_VERSION}")?;
    writeln!(f, "stage,r,eta,delta,n,lambda,lambda_refined,first_moment")?;
    for (k, s) in result.stages.iter().enumerate() {
        writeln!(
            f,
            "{k},{},{},{},{},{},{},{}",
            s.radius, s.eta, s.delta, s.n_cells, s.lambda, s.lambda_refined, s.first_moment
        )?;
    }
    f.flush()
}

/// Mesh-refinement rows: `n, dx, eta, lambda, error, observed_order`.
pub fn write_order_csv(path: &Path, study: &OrderStudy) -> io::Result<()> {
    let mut f = io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "# growfrag-order v{SCHEMA_VERSION}")?;
    writeln!(f, "n,dx,eta,lambda,error,observed_order")?;
    for r in &study.rows {
        writeln!(
            f,
            "{},{},{},{},{},{}",
            r.n_cells,
            r.mesh_width,
            r.eta,
            r.lambda,
            r.error.map(|v| v.to_string()).unwrap_or_default(),
            r.observed_order.map(|v| v.to_string()).unwrap_or_default()
        )?;
    }
    f.flush()
}

#[derive(Debug, Serialize)]
pub struct AuditSummary<'a> {
    pub schema_version: u32,
    #[serde(flatten)]
    pub report: &'a AssumptionReport,
}

pub fn write_audit_json(path: &Path, report: &AssumptionReport) -> io::Result<()> {
    write_json(
        path,
        &AuditSummary {
            schema_version: SCHEMA_VERSION,
            report,
        },
    )
}

/// Plain-text audit table for the terminal.
pub fn audit_table(report: &AssumptionReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<14} {:<13} {:<12} detail\n",
        "assumption", "status", "witness"
    ));
    for e in &report.entries {
        out.push_str(&format!(
            "{:<14} {:<13} {:<12.5e} {}\n",
            e.id,
            format!("{:?}", e.status).to_lowercase(),
            e.witness,
            e.detail
        ));
    }
    out.push_str(&format!(
        "second moment c = {:.12}, middle mass >= {:.6}, certified c <= {:.6}\n",
        report.second_moment_c, report.middle_mass_lower_bound, report.certified_c
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit;
    use crate::problem::linear_beta_problem;

    #[test]
    fn audit_table_lists_every_entry() {
        let p = linear_beta_problem(1.0, 1.0);
        let report = audit::audit(&p, &audit::default_probe(&p));
        let table = audit_table(&report);
        for e in &report.entries {
            assert!(table.contains(e.id), "missing {}", e.id);
        }
    }

    #[test]
    fn csv_headers_versioned() {
        let dir = std::env::temp_dir().join("growfrag-report-test");
        std::fs::create_dir_all(&dir).unwrap();
        let p = linear_beta_problem(1.0, 1.0);
        let report = audit::audit(&p, &audit::default_probe(&p));
        let path = dir.join("audit.json");
        write_audit_json(&path, &report).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"schema_version\": 1"));
    }
}
