//! Finite-volume meshes on the truncated size domain.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("domain radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error("need at least 2 cells, got {0}")]
    TooFewCells(usize),
    #[error("geometric ratio must exceed 1, got {0}")]
    BadRatio(f64),
    #[error("geometric grids require a domain starting at 0")]
    GeometricOffset,
    #[error("left endpoint {left} must satisfy 0 <= left < {right}")]
    BadInterval { left: f64, right: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Uniform,
    /// Cells cluster towards the origin: edge `j` sits at `R * ratio^(j-N)`
    /// for `1 <= j <= N`, with edge 0 pinned at the left endpoint.
    Geometric {
        ratio: f64,
    },
}

/// Cell partition `x_0 < x_1 < ... < x_N` of `[x_left, R]` with precomputed
/// widths and centers. Cells are half-open `[x_j, x_{j+1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    radius: f64,
    kind: GridKind,
    edges: Vec<f64>,
    widths: Vec<f64>,
    centers: Vec<f64>,
}

impl Grid {
    pub fn uniform(radius: f64, n_cells: usize) -> Result<Self, GridError> {
        Self::on_interval(0.0, radius, n_cells, GridKind::Uniform)
    }

    pub fn geometric(radius: f64, n_cells: usize, ratio: f64) -> Result<Self, GridError> {
        Self::on_interval(0.0, radius, n_cells, GridKind::Geometric { ratio })
    }

    pub fn on_interval(
        left: f64,
        radius: f64,
        n_cells: usize,
        kind: GridKind,
    ) -> Result<Self, GridError> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(GridError::BadRadius(radius));
        }
        if !(left >= 0.0) || left >= radius {
            return Err(GridError::BadInterval {
                left,
                right: radius,
            });
        }
        if n_cells < 2 {
            return Err(GridError::TooFewCells(n_cells));
        }
        let edges = match kind {
            GridKind::Uniform => (0..=n_cells)
                .map(|j| left + (radius - left) * j as f64 / n_cells as f64)
                .collect::<Vec<_>>(),
            GridKind::Geometric { ratio } => {
                if !(ratio > 1.0) || !ratio.is_finite() {
                    return Err(GridError::BadRatio(ratio));
                }
                if left != 0.0 {
                    return Err(GridError::GeometricOffset);
                }
                let mut e = vec![0.0];
                e.extend((1..=n_cells).map(|j| radius * ratio.powi(j as i32 - n_cells as i32)));
                e
            }
        };
        let widths: Vec<f64> = edges.windows(2).map(|w| w[1] - w[0]).collect();
        let centers: Vec<f64> = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        debug_assert!(widths.iter().all(|w| *w > 0.0));
        Ok(Self {
            radius,
            kind,
            edges,
            widths,
            centers,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn left(&self) -> f64 {
        self.edges[0]
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn n_cells(&self) -> usize {
        self.widths.len()
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn max_width(&self) -> f64 {
        self.widths.iter().copied().fold(0.0, f64::max)
    }

    /// Index of the half-open cell `[x_j, x_{j+1})` containing `x`, `None`
    /// outside `[x_0, x_N)`.
    pub fn cell_of(&self, x: f64) -> Option<usize> {
        if x < self.edges[0] || x >= self.radius {
            return None;
        }
        let j = self.edges.partition_point(|&e| e <= x) - 1;
        Some(j.min(self.n_cells() - 1))
    }

    /// Weighted inner product `sum_j u_j v_j dx_j`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        crate::quadrature::kahan_sum(
            u.iter()
                .zip(v)
                .zip(&self.widths)
                .map(|((a, b), w)| a * b * w),
        )
    }

    /// Weighted L1 mass `sum_j u_j dx_j`.
    pub fn mass(&self, u: &[f64]) -> f64 {
        crate::quadrature::kahan_sum(u.iter().zip(&self.widths).map(|(a, w)| a * w))
    }

    /// Weighted L1 norm of `u`.
    pub fn l1_norm(&self, u: &[f64]) -> f64 {
        crate::quadrature::kahan_sum(u.iter().zip(&self.widths).map(|(a, w)| a.abs() * w))
    }

    /// Samples a scalar function at the cell centers.
    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.centers.iter().map(|&x| f(x)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_edges_exact() {
        let g = Grid::uniform(1.0, 4).unwrap();
        assert_eq!(g.edges(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        for w in g.widths() {
            assert!((w - 0.25).abs() <= f64::EPSILON);
        }
    }

    #[test]
    fn geometric_rule_matches_documented_construction() {
        let g = Grid::geometric(8.0, 3, 2.0).unwrap();
        assert_eq!(g.edges(), &[0.0, 2.0, 4.0, 8.0]);
    }

    #[test]
    fn single_cell_rejected() {
        assert!(matches!(
            Grid::uniform(1.0, 1),
            Err(GridError::TooFewCells(1))
        ));
    }

    #[test]
    fn non_finite_radius_rejected() {
        assert!(Grid::uniform(f64::NAN, 8).is_err());
        assert!(Grid::uniform(f64::INFINITY, 8).is_err());
    }

    #[test]
    fn centers_sit_inside_cells() {
        let g = Grid::geometric(10.0, 32, 1.3).unwrap();
        for j in 0..g.n_cells() {
            assert!(g.edges()[j] < g.centers()[j] && g.centers()[j] < g.edges()[j + 1]);
        }
    }

    #[test]
    fn cell_lookup_half_open() {
        let g = Grid::uniform(1.0, 4).unwrap();
        assert_eq!(g.cell_of(0.25), Some(1));
        assert_eq!(g.cell_of(0.0), Some(0));
        assert_eq!(g.cell_of(1.0), None);
    }

    #[test]
    fn shifted_interval_for_minimal_size() {
        let g = Grid::on_interval(1.0, 3.0, 4, GridKind::Uniform).unwrap();
        assert_eq!(g.left(), 1.0);
        assert_eq!(g.edges().last().copied(), Some(3.0));
    }
}
