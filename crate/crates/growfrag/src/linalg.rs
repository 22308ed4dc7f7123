//! Dense storage and the Hessenberg LU factorisation behind the shifted
//! inverse iterations.
//!
//! The assembled operator is upper Hessenberg: the fragmentation gain fills
//! the upper triangle, upwind transport adds one subdiagonal. Eliminating a
//! single subdiagonal entry per column gives an `O(n^2)` factorisation with
//! `O(n^2)` triangular solves. Shifted matrices `nu I - M` with `nu` beyond
//! the spectral abscissa of the Metzler generator `M` are nonsingular
//! M-matrices, for which elimination without pivoting is stable and keeps all
//! Schur complements in the same class, so no pivot search is needed; a
//! vanishing pivot is reported instead.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error(
        "pivot {value:e} at step {step} below breakdown threshold; shift too close to the spectrum"
    )]
    TinyPivot { step: usize, value: f64 },
}

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMat {
    n: usize,
    a: Vec<f64>,
}

impl DenseMat {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            a: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n);
            m.a[i * n..(i + 1) * n].copy_from_slice(row);
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.a[i * self.n + j]
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        self.a
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `self - shift * I`, negated: returns `shift * I - self`.
    pub fn shifted_from(&self, shift: f64) -> DenseMat {
        let mut out = DenseMat::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                *out.at_mut(i, j) = -self.at(i, j);
            }
            *out.at_mut(i, i) += shift;
        }
        out
    }

    pub fn max_abs_diag(&self) -> f64 {
        (0..self.n).map(|i| self.at(i, i).abs()).fold(0.0, f64::max)
    }
}

/// LU factorisation of an upper Hessenberg matrix without pivoting:
/// `A = L U` with unit lower bidiagonal `L` (one multiplier per column) and
/// upper triangular `U` stored in place.
pub struct HessenbergLu {
    n: usize,
    u: Vec<f64>,
    multipliers: Vec<f64>,
}

impl HessenbergLu {
    pub fn factor(mat: DenseMat) -> Result<Self, LinalgError> {
        let n = mat.n;
        let mut u = mat.a;
        let mut multipliers = vec![0.0; n.saturating_sub(1)];
        let scale = u
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs()))
            .max(f64::MIN_POSITIVE);
        let breakdown = scale * 1e-14;
        for k in 0..n.saturating_sub(1) {
            let pivot = u[k * n + k];
            if pivot.abs() < breakdown {
                return Err(LinalgError::TinyPivot {
                    step: k,
                    value: pivot,
                });
            }
            let m = u[(k + 1) * n + k] / pivot;
            multipliers[k] = m;
            u[(k + 1) * n + k] = 0.0;
            if m != 0.0 {
                // one row update per column keeps the factorisation O(n^2)
                let (top, bottom) = u.split_at_mut((k + 1) * n);
                let row_k = &top[k * n + k + 1..k * n + n];
                let row_k1 = &mut bottom[k + 1..n];
                for (x, y) in row_k1.iter_mut().zip(row_k) {
                    *x -= m * y;
                }
            }
        }
        let last = u[(n - 1) * n + (n - 1)];
        if last.abs() < breakdown {
            return Err(LinalgError::TinyPivot {
                step: n - 1,
                value: last,
            });
        }
        Ok(Self { n, u, multipliers })
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        // forward: L y = b, L unit lower bidiagonal
        for k in 0..n - 1 {
            b[k + 1] -= self.multipliers[k] * b[k];
        }
        // back: U x = y
        for i in (0..n).rev() {
            let row = &self.u[i * n..(i + 1) * n];
            let s: f64 = row[i + 1..]
                .iter()
                .zip(&b[i + 1..])
                .map(|(a, x)| a * x)
                .sum();
            b[i] = (b[i] - s) / row[i];
        }
    }

    /// Solves `A^T x = b` in place using the same factors
    /// (`A^T = U^T L^T`).
    pub fn solve_transposed(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        // forward: U^T y = b, U^T lower triangular
        for i in 0..n {
            let row = &self.u[i * n..(i + 1) * n];
            b[i] /= row[i];
            let bi = b[i];
            for (j, a) in row.iter().enumerate().skip(i + 1) {
                b[j] -= a * bi;
            }
        }
        // back: L^T x = y, upper bidiagonal with the multipliers
        for k in (0..n - 1).rev() {
            b[k] -= self.multipliers[k] * b[k + 1];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_hessenberg(n: usize, seed: u64) -> DenseMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = DenseMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                if j + 1 >= i {
                    *m.at_mut(i, j) = rng.random::<f64>();
                }
            }
            // diagonally dominant so the pivot-free elimination is safe
            *m.at_mut(i, i) += n as f64;
        }
        m
    }

    #[test]
    fn solves_match_matvec() {
        let n = 60;
        let a = random_hessenberg(n, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let b = a.matvec(&x);
        let lu = HessenbergLu::factor(a).unwrap();
        let mut sol = b.clone();
        lu.solve(&mut sol);
        for (xi, si) in x.iter().zip(&sol) {
            assert_relative_eq!(*xi, *si, epsilon = 1e-10);
        }
    }

    #[test]
    fn transposed_solve_consistent() {
        let n = 45;
        let a = random_hessenberg(n, 9);
        // b = A^T x
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let mut b = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                b[j] += a.at(i, j) * x[i];
            }
        }
        let lu = HessenbergLu::factor(a).unwrap();
        lu.solve_transposed(&mut b);
        for (xi, si) in x.iter().zip(&b) {
            assert_relative_eq!(*xi, *si, epsilon = 1e-10);
        }
    }

    #[test]
    fn singular_matrix_reported() {
        let m = DenseMat::from_rows(&[&[1.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(
            HessenbergLu::factor(m),
            Err(LinalgError::TinyPivot { .. })
        ));
    }
}
