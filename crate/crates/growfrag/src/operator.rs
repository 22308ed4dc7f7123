//! Assembly of the truncated growth-fragmentation operator and its adjoint.
//!
//! The domain is truncated to `[0, R]`, the growth rate floored to
//! `tau_eta(x) = eta` on `[0, eta]`, and a boundary inflow `delta * ∫u`
//! enters the first cell, which turns the regularised problem into a genuine
//! linear eigenproblem. Transport is discretised first-order upwind (flux out
//! of cell `j` is `tau_eta(x_{j+1}) u_j`), the fragmentation gain by exact
//! kernel masses per (source, target) cell pair, renormalised per source
//! column so that no fragment mass is created or lost by the mesh.
//!
//! The assembled matrix has nonnegative off-diagonal entries, so after an
//! `nu I - M` shift with `nu` beyond the spectral abscissa it is an
//! M-matrix and inverse power iteration preserves positivity exactly.

use std::io::{self, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Grid;
use crate::linalg::DenseMat;
use crate::problem::{ProblemError, ProblemSpec};
use crate::quadrature::kahan_sum;

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error(
        "delta * R = {product} must stay below the growth floor mu_inf = {mu_inf} \
         (delta = {delta}, R = {radius})"
    )]
    DeltaRegime {
        delta: f64,
        radius: f64,
        mu_inf: f64,
        product: f64,
    },
    #[error("floored growth rate has no positive lower bound on [0, R]; pick eta > 0")]
    NoPositiveFloor,
    #[error("truncation radius {trunc} does not match grid radius {grid}")]
    RadiusMismatch { trunc: f64, grid: f64 },
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Parameters `(R, eta, delta)` of the truncated problem, with
/// `mu_inf = inf tau_eta` on `[0, R]`. The standard regime takes
/// `delta = mu_inf / (2R)` so that `delta R < mu_inf` and the truncated
/// eigenvalue stays positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationParams {
    pub radius: f64,
    pub eta: f64,
    pub mu_inf: f64,
    pub delta: f64,
}

impl TruncationParams {
    /// Standard choice `delta = mu_inf / (2R)`.
    pub fn standard(problem: &ProblemSpec, grid: &Grid, eta: f64) -> Self {
        let mu_inf = growth_floor(problem, grid, eta);
        let radius = grid.radius();
        Self {
            radius,
            eta,
            mu_inf,
            delta: 0.5 * mu_inf / radius,
        }
    }

    /// Explicit `delta`, validated against the regime at assembly time.
    pub fn with_delta(problem: &ProblemSpec, grid: &Grid, eta: f64, delta: f64) -> Self {
        let mu_inf = growth_floor(problem, grid, eta);
        Self {
            radius: grid.radius(),
            eta,
            mu_inf,
            delta,
        }
    }

    /// Floored growth rate: `eta` on `[0, eta]`, `tau` beyond (`eta = 0`
    /// leaves `tau` untouched).
    pub fn tau_eta(&self, problem: &ProblemSpec, x: f64) -> f64 {
        if self.eta > 0.0 && x <= self.eta {
            self.eta
        } else {
            problem.tau.eval(x)
        }
    }
}

/// `inf` of `tau_eta` over the grid domain, evaluated at edges, centers, the
/// floor kink and, for tabulated rates, at the table nodes (piecewise
/// monotone between those points for every supported rate kind).
fn growth_floor(problem: &ProblemSpec, grid: &Grid, eta: f64) -> f64 {
    let tau_eta = |x: f64| {
        if eta > 0.0 && x <= eta {
            eta
        } else {
            problem.tau.eval(x)
        }
    };
    let mut inf = f64::INFINITY;
    for &x in grid.edges().iter().chain(grid.centers()) {
        inf = inf.min(tau_eta(x));
    }
    if eta > grid.left() && eta < grid.radius() {
        inf = inf.min(tau_eta(eta));
        inf = inf.min(tau_eta(eta * (1.0 + 1e-12)));
    }
    if let crate::problem::RateKind::Tabulated { xs, .. } = problem.tau.kind() {
        for &x in xs {
            if x > grid.left() && x < grid.radius() {
                inf = inf.min(tau_eta(x));
            }
        }
    }
    inf
}

struct OperatorCore {
    grid: Grid,
    trunc: TruncationParams,
    n_fragments: f64,
    /// `tau_eta` at the right edge of each cell; entry `i` drives the upwind
    /// flux out of cell `i`.
    edge_speed: Vec<f64>,
    /// `tau_eta` at cell centers (diagnostics: `tau U` profiles, CFL).
    center_speed: Vec<f64>,
    /// `beta + mu` at cell centers.
    loss: Vec<f64>,
    /// `n * beta` at cell centers (gain prefactor per source column).
    n_beta: Vec<f64>,
    /// Packed kernel mass fractions: column `j` holds `m_ij` for
    /// `i = 0..=j`, renormalised to the exact kernel mass of
    /// `[x_left, y_j]`.
    frag_mass: Vec<f64>,
    col_ptr: Vec<usize>,
    /// Largest deviation of a column's first moment from `y_j * m1`.
    first_moment_defect: f64,
}

/// Discrete truncated operator; `adjoint` selects the transpose in the
/// `sum u_j v_j dx_j` inner product (which carries the `delta * phi(0)`
/// source and the `phi(R) = 0` outflow condition automatically).
#[derive(Clone)]
pub struct DiscreteOperator {
    core: Arc<OperatorCore>,
    adjoint: bool,
}

/// Builds the discrete direct operator of the truncated problem.
pub fn assemble_direct(
    problem: &ProblemSpec,
    grid: &Grid,
    trunc: &TruncationParams,
) -> Result<DiscreteOperator, AssemblyError> {
    if (trunc.radius - grid.radius()).abs() > 1e-12 * grid.radius() {
        return Err(AssemblyError::RadiusMismatch {
            trunc: trunc.radius,
            grid: grid.radius(),
        });
    }
    if !(trunc.mu_inf > 0.0) {
        return Err(AssemblyError::NoPositiveFloor);
    }
    if trunc.delta * trunc.radius >= trunc.mu_inf {
        return Err(AssemblyError::DeltaRegime {
            delta: trunc.delta,
            radius: trunc.radius,
            mu_inf: trunc.mu_inf,
            product: trunc.delta * trunc.radius,
        });
    }
    assemble_generator(problem, grid, *trunc)
}

/// Assembles the generator without the positive-eigenvalue regime checks;
/// used directly by the time integrator with `eta = 0`, `delta = 0`.
pub fn assemble_generator(
    problem: &ProblemSpec,
    grid: &Grid,
    trunc: TruncationParams,
) -> Result<DiscreteOperator, AssemblyError> {
    let n = grid.n_cells();
    let centers = grid.centers();
    let edges = grid.edges();

    let edge_speed: Vec<f64> = (0..n)
        .map(|i| trunc.tau_eta(problem, edges[i + 1]))
        .collect();
    let center_speed: Vec<f64> = centers.iter().map(|&x| trunc.tau_eta(problem, x)).collect();
    let loss: Vec<f64> = centers
        .iter()
        .map(|&x| problem.beta.eval(x) + problem.death_mu.eval(x))
        .collect();
    let n_beta: Vec<f64> = centers
        .iter()
        .map(|&x| problem.n_fragments() * problem.beta.eval(x))
        .collect();

    let mut col_ptr = Vec::with_capacity(n + 1);
    col_ptr.push(0usize);
    for j in 0..n {
        col_ptr.push(col_ptr[j] + j + 1);
    }
    let mut frag_mass = vec![0.0; col_ptr[n]];
    let kernel = &problem.kernel;
    let m1 = kernel.moment(1.0, 1)?;
    let mut first_moment_defect: f64 = 0.0;

    for j in 0..n {
        if n_beta[j] == 0.0 {
            continue;
        }
        let y = centers[j];
        let col = &mut frag_mass[col_ptr[j]..col_ptr[j + 1]];
        // cdf at each cell edge up to the source cell, one pass per column
        let mut prev = kernel.cdf0((edges[0] / y).min(1.0 + 1e-9));
        let mut sum = 0.0;
        for (i, slot) in col.iter_mut().enumerate() {
            let hi = if edges[i + 1] > y {
                1.0 + 1e-9
            } else {
                edges[i + 1] / y
            };
            let cdf_hi = kernel.cdf0(hi);
            *slot = (cdf_hi - prev).max(0.0);
            sum += *slot;
            prev = cdf_hi;
        }
        // Renormalise to the exact kernel mass of [x_left, y_j] so the
        // discrete operator neither creates nor destroys fragment mass.
        let target = kernel.mass(y, grid.left(), grid.radius())?;
        if sum > 0.0 {
            let scale = target / sum;
            for slot in col.iter_mut() {
                *slot *= scale;
            }
        }
        let col_fm: f64 = col.iter().enumerate().map(|(i, m)| m * centers[i]).sum();
        first_moment_defect = first_moment_defect.max((col_fm - y * m1).abs());
    }

    Ok(DiscreteOperator {
        core: Arc::new(OperatorCore {
            grid: grid.clone(),
            trunc,
            n_fragments: problem.n_fragments(),
            edge_speed,
            center_speed,
            loss,
            n_beta,
            frag_mass,
            col_ptr,
            first_moment_defect,
        }),
        adjoint: false,
    })
}

/// The adjoint in the weighted inner product; shares storage with the direct
/// operator.
pub fn assemble_adjoint(direct: &DiscreteOperator) -> DiscreteOperator {
    DiscreteOperator {
        core: Arc::clone(&direct.core),
        adjoint: !direct.adjoint,
    }
}

impl DiscreteOperator {
    pub fn n(&self) -> usize {
        self.core.loss.len()
    }

    pub fn grid(&self) -> &Grid {
        &self.core.grid
    }

    pub fn trunc(&self) -> &TruncationParams {
        &self.core.trunc
    }

    pub fn is_adjoint(&self) -> bool {
        self.adjoint
    }

    pub fn adjoint(&self) -> DiscreteOperator {
        assemble_adjoint(self)
    }

    /// True when both handles wrap the same assembled core.
    pub fn shares_core(&self, other: &DiscreteOperator) -> bool {
        Arc::ptr_eq(&self.core, &other.core)
    }

    /// Floored growth rate at the cell centers.
    pub fn center_speeds(&self) -> &[f64] {
        &self.core.center_speed
    }

    /// Floored growth rate at the right cell edges (upwind flux speeds).
    pub fn edge_speeds(&self) -> &[f64] {
        &self.core.edge_speed
    }

    /// Total loss rate `beta + mu` at the cell centers.
    pub fn loss_rates(&self) -> &[f64] {
        &self.core.loss
    }

    pub fn n_fragments(&self) -> f64 {
        self.core.n_fragments
    }

    /// Fragmentation rate at the cell centers.
    pub fn beta_centers(&self) -> Vec<f64> {
        self.core
            .n_beta
            .iter()
            .map(|nb| nb / self.core.n_fragments)
            .collect()
    }

    /// Largest deviation of a discrete column first moment from `y_j * m1`;
    /// first order in the mesh width by construction.
    pub fn first_moment_defect(&self) -> f64 {
        self.core.first_moment_defect
    }

    /// Renormalised column mass `sum_i m_ij` for source cell `j`.
    pub fn column_mass(&self, j: usize) -> f64 {
        let c = &self.core;
        kahan_sum(c.frag_mass[c.col_ptr[j]..c.col_ptr[j + 1]].iter().copied())
    }

    /// Applies the operator to a cell-average vector.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n());
        if self.adjoint {
            self.apply_adjoint_inner(v)
        } else {
            self.apply_direct_inner(v)
        }
    }

    fn apply_direct_inner(&self, u: &[f64]) -> Vec<f64> {
        let c = &self.core;
        let n = u.len();
        let w = c.grid.widths();
        let mut out = vec![0.0; n];

        // upwind transport + loss
        for i in 0..n {
            let inflow = if i > 0 {
                c.edge_speed[i - 1] * u[i - 1]
            } else {
                0.0
            };
            out[i] = (inflow - c.edge_speed[i] * u[i]) / w[i] - c.loss[i] * u[i];
        }
        // fragmentation gain: out_i += (1/dx_i) sum_{j>=i} m_ij (n beta_j u_j dx_j)
        let q: Vec<f64> = (0..n).map(|j| c.n_beta[j] * u[j] * w[j]).collect();
        for j in 0..n {
            if q[j] == 0.0 {
                continue;
            }
            let col = &c.frag_mass[c.col_ptr[j]..c.col_ptr[j + 1]];
            for (i, m) in col.iter().enumerate() {
                out[i] += m * q[j] / w[i];
            }
        }
        // boundary inflow delta * ∫u into the first cell
        if c.trunc.delta != 0.0 {
            out[0] += c.trunc.delta * c.grid.mass(u) / w[0];
        }
        out
    }

    fn apply_adjoint_inner(&self, phi: &[f64]) -> Vec<f64> {
        let c = &self.core;
        let n = phi.len();
        let w = c.grid.widths();
        let mut out = vec![0.0; n];

        for j in 0..n {
            // transport transpose: tau_eta * downwind difference, ghost
            // phi(R) = 0 at the last cell
            let ahead = if j + 1 < n { phi[j + 1] } else { 0.0 };
            out[j] = c.edge_speed[j] * (ahead - phi[j]) / w[j] - c.loss[j] * phi[j];
            // gain transpose: n beta_j * sum_{i<=j} m_ij phi_i
            if c.n_beta[j] != 0.0 {
                let col = &c.frag_mass[c.col_ptr[j]..c.col_ptr[j + 1]];
                let dot: f64 = col.iter().zip(phi).map(|(m, p)| m * p).sum();
                out[j] += c.n_beta[j] * dot;
            }
            // inflow transpose: the delta * phi(0) source
            if c.trunc.delta != 0.0 {
                out[j] += c.trunc.delta * phi[0];
            }
        }
        out
    }

    /// Dense form; column `j` is the image of the `j`-th basis vector scaled
    /// consistently with [`Self::apply`].
    pub fn to_dense(&self) -> DenseMat {
        let c = &self.core;
        let n = self.n();
        let w = c.grid.widths();
        let mut a = DenseMat::zeros(n);
        if !self.adjoint {
            for i in 0..n {
                *a.at_mut(i, i) += -c.edge_speed[i] / w[i] - c.loss[i];
                if i > 0 {
                    *a.at_mut(i, i - 1) += c.edge_speed[i - 1] / w[i];
                }
            }
            for j in 0..n {
                if c.n_beta[j] == 0.0 {
                    continue;
                }
                let col = &c.frag_mass[c.col_ptr[j]..c.col_ptr[j + 1]];
                for (i, m) in col.iter().enumerate() {
                    *a.at_mut(i, j) += m * c.n_beta[j] * w[j] / w[i];
                }
            }
            if c.trunc.delta != 0.0 {
                for j in 0..n {
                    *a.at_mut(0, j) += c.trunc.delta * w[j] / w[0];
                }
            }
        } else {
            for j in 0..n {
                *a.at_mut(j, j) += -c.edge_speed[j] / w[j] - c.loss[j];
                if j + 1 < n {
                    *a.at_mut(j, j + 1) += c.edge_speed[j] / w[j];
                }
                if c.n_beta[j] != 0.0 {
                    let col = &c.frag_mass[c.col_ptr[j]..c.col_ptr[j + 1]];
                    for (i, m) in col.iter().enumerate() {
                        *a.at_mut(j, i) += c.n_beta[j] * m;
                    }
                }
                if c.trunc.delta != 0.0 {
                    *a.at_mut(j, 0) += c.trunc.delta;
                }
            }
        }
        a
    }

    /// Largest diagonal magnitude; drives the default spectral shift.
    pub fn max_abs_diagonal(&self) -> f64 {
        let c = &self.core;
        let w = c.grid.widths();
        let mut m: f64 = 0.0;
        for i in 0..self.n() {
            let mut d = -c.edge_speed[i] / w[i] - c.loss[i];
            // diagonal gain entry (self-replenishment of the source cell)
            let col = &c.frag_mass[c.col_ptr[i]..c.col_ptr[i + 1]];
            if let Some(mii) = col.last() {
                d += c.n_beta[i] * mii;
            }
            if i == 0 && !self.adjoint {
                d += c.trunc.delta;
            }
            m = m.max(d.abs());
        }
        m
    }

    /// Writes the operator as `row col value` coordinate triplets with a
    /// droptol of exact zeros, preceded by a `# rows cols nnz` header.
    pub fn export_coo<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let n = self.n();
        let dense = self.to_dense();
        let mut entries = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = dense.at(i, j);
                if v != 0.0 {
                    entries.push((i, j, v));
                }
            }
        }
        writeln!(out, "# {} {} {}", n, n, entries.len())?;
        for (i, j, v) in entries {
            writeln!(out, "{} {} {v}", i, j)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{linear_beta_problem, KernelSpec, ProblemSpec, RateSpec};
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn first_example_op(n: usize, r: f64) -> DiscreteOperator {
        let p = linear_beta_problem(1.0, 1.0);
        let g = Grid::uniform(r, n).unwrap();
        let t = TruncationParams::standard(&p, &g, 0.0);
        assemble_direct(&p, &g, &t).unwrap()
    }

    #[test]
    fn equal_mitosis_column_hits_half_cell() {
        let p = ProblemSpec::new(
            RateSpec::constant(1.0).unwrap(),
            RateSpec::constant(1.0).unwrap(),
            KernelSpec::equal_mitosis(),
        );
        let g = Grid::uniform(10.0, 100).unwrap();
        let t = TruncationParams::standard(&p, &g, 0.0);
        let op = assemble_direct(&p, &g, &t).unwrap();
        // source cell centered at y: all mass lands in the cell holding y/2
        let j = 61;
        let y = g.centers()[j];
        let half_cell = g.cell_of(y / 2.0).unwrap();
        let col = &op.core.frag_mass[op.core.col_ptr[j]..op.core.col_ptr[j + 1]];
        for (i, m) in col.iter().enumerate() {
            if i == half_cell {
                assert_relative_eq!(*m, 1.0, epsilon = 1e-12);
            } else {
                assert_eq!(*m, 0.0);
            }
        }
    }

    #[test]
    fn uniform_column_mass_proportional_to_length() {
        let op = first_example_op(50, 10.0);
        let g = op.grid();
        let j = 30;
        let y = g.centers()[j];
        let col = &op.core.frag_mass[op.core.col_ptr[j]..op.core.col_ptr[j + 1]];
        for (i, m) in col.iter().enumerate().take(j) {
            assert_relative_eq!(*m, g.widths()[i] / y, epsilon = 1e-9);
        }
        assert_relative_eq!(op.column_mass(j), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn column_masses_renormalised() {
        let p = ProblemSpec::new(
            RateSpec::constant(1.0).unwrap(),
            RateSpec::power_law(1.0, 1.0).unwrap(),
            KernelSpec::homogeneous(-0.5).unwrap(),
        );
        let g = Grid::geometric(20.0, 128, 1.05).unwrap();
        let t = TruncationParams::standard(&p, &g, 0.0);
        let op = assemble_direct(&p, &g, &t).unwrap();
        for j in 0..op.n() {
            assert_relative_eq!(op.column_mass(j), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn transport_telescopes_to_boundary_fluxes() {
        let p = ProblemSpec::new(
            RateSpec::affine(0.5, 0.25).unwrap(),
            RateSpec::zero(),
            KernelSpec::uniform(),
        );
        let g = Grid::uniform(8.0, 64).unwrap();
        let t = TruncationParams::with_delta(&p, &g, 0.0, 0.0);
        let op = assemble_generator(&p, &g, t).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u: Vec<f64> = (0..64).map(|_| rng.random::<f64>()).collect();
        let total: f64 = g.mass(&op.apply(&u));
        let outflux = op.core.edge_speed[63] * u[63];
        assert_relative_eq!(total, -outflux, epsilon = 1e-12 * outflux.abs().max(1.0));
    }

    #[test]
    fn adjoint_identity_holds() {
        let op = first_example_op(80, 15.0);
        let adj = assemble_adjoint(&op);
        let g = op.grid();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let u: Vec<f64> = (0..80).map(|_| rng.random::<f64>()).collect();
            let phi: Vec<f64> = (0..80).map(|_| rng.random::<f64>()).collect();
            let lhs = g.inner(&op.apply(&u), &phi);
            let rhs = g.inner(&u, &adj.apply(&phi));
            assert_relative_eq!(lhs, rhs, epsilon = 1e-13 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn adjoint_identity_on_nonuniform_grid() {
        let p = linear_beta_problem(1.0, 1.0);
        let g = Grid::geometric(15.0, 60, 1.08).unwrap();
        let t = TruncationParams::standard(&p, &g, 0.0);
        let op = assemble_direct(&p, &g, &t).unwrap();
        let adj = op.adjoint();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u: Vec<f64> = (0..60).map(|_| rng.random::<f64>()).collect();
        let phi: Vec<f64> = (0..60).map(|_| rng.random::<f64>()).collect();
        let lhs = g.inner(&op.apply(&u), &phi);
        let rhs = g.inner(&u, &adj.apply(&phi));
        assert_relative_eq!(lhs, rhs, epsilon = 1e-13 * lhs.abs().max(1.0));
    }

    #[test]
    fn delta_source_separates_cleanly() {
        // the adjoint with delta differs from the delta = 0 adjoint by
        // exactly delta * phi(0) in every component
        let p = linear_beta_problem(1.0, 1.0);
        let g = Grid::uniform(10.0, 32).unwrap();
        let delta = 0.03;
        let with = assemble_generator(&p, &g, TruncationParams::with_delta(&p, &g, 0.0, delta))
            .unwrap()
            .adjoint();
        let without = assemble_generator(&p, &g, TruncationParams::with_delta(&p, &g, 0.0, 0.0))
            .unwrap()
            .adjoint();
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let phi: Vec<f64> = (0..32).map(|_| rng.random::<f64>()).collect();
        let a = with.apply(&phi);
        let b = without.apply(&phi);
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(x - y, delta * phi[0], epsilon = 1e-14);
        }
    }

    #[test]
    fn dense_matches_apply() {
        let op = first_example_op(40, 10.0);
        for which in [op.clone(), op.adjoint()] {
            let dense = which.to_dense();
            let mut rng = ChaCha8Rng::seed_from_u64(23);
            let v: Vec<f64> = (0..40).map(|_| rng.random::<f64>()).collect();
            let a = which.apply(&v);
            let b = dense.matvec(&v);
            for (x, y) in a.iter().zip(&b) {
                assert_relative_eq!(*x, *y, epsilon = 1e-11 * x.abs().max(1.0));
            }
        }
    }

    #[test]
    fn delta_regime_violation_rejected() {
        let p = linear_beta_problem(1.0, 1.0);
        let g = Grid::uniform(10.0, 32).unwrap();
        let t = TruncationParams::with_delta(&p, &g, 0.0, 1.0);
        assert!(matches!(
            assemble_direct(&p, &g, &t),
            Err(AssemblyError::DeltaRegime { .. })
        ));
    }

    #[test]
    fn vanishing_growth_needs_floor() {
        // tau = x vanishes at the origin: eta = 0 leaves no positive floor.
        let p = ProblemSpec::new(
            RateSpec::power_law(1.0, 1.0).unwrap(),
            RateSpec::power_law(1.0, 1.0).unwrap(),
            KernelSpec::uniform(),
        );
        let g = Grid::uniform(10.0, 32).unwrap();
        let t = TruncationParams::standard(&p, &g, 0.0);
        assert!(matches!(
            assemble_direct(&p, &g, &t),
            Err(AssemblyError::NoPositiveFloor)
        ));
        let t = TruncationParams::standard(&p, &g, 1e-3);
        assert!(assemble_direct(&p, &g, &t).is_ok());
    }

    #[test]
    fn first_moment_defect_first_order() {
        let defects: Vec<f64> = [100, 200, 400]
            .iter()
            .map(|&n| first_example_op(n, 10.0).first_moment_defect())
            .collect();
        assert!(defects[1] < 0.75 * defects[0]);
        assert!(defects[2] < 0.75 * defects[1]);
    }

    #[test]
    fn coo_export_roundtrip_count() {
        let op = first_example_op(12, 4.0);
        let mut buf = Vec::new();
        op.export_coo(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        let nnz: usize = header.split_whitespace().last().unwrap().parse().unwrap();
        assert_eq!(text.lines().count(), nnz + 1);
    }
}
