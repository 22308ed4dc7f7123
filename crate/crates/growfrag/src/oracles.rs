//! Closed-form eigentriples and brute-force references for tests and
//! acceptance runs.
//!
//! Two explicit families are available under the uniform kernel: constant
//! growth with linear fragmentation, and linear growth with power-law
//! fragmentation. The dense-spectrum oracle computes every eigenvalue of a
//! small assembled operator through an independent QR-type path and recovers
//! the Perron pair, giving the iterative solver something to be checked
//! against.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::linalg::DenseMat;
use crate::operator::DiscreteOperator;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("parameter {name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("dense spectrum oracle is desk-scale only: n = {0} exceeds 400")]
    TooLarge(usize),
    #[error("no real dominant eigenvalue found")]
    NoPerronValue,
    #[error("inverse iteration on the oracle matrix failed to converge")]
    VectorNotConverged,
}

/// Eigentriple in closed form: the eigenvalue plus callable eigenfunctions.
pub struct AnalyticTriple {
    pub lambda: f64,
    u: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    phi: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Human-readable validity constraints on the parameters.
    pub validity: &'static str,
}

impl AnalyticTriple {
    pub fn u(&self, x: f64) -> f64 {
        (self.u)(x)
    }

    pub fn phi(&self, x: f64) -> f64 {
        (self.phi)(x)
    }

    /// Samples both eigenfunctions at the cell centers of `grid`.
    pub fn sample(&self, grid: &crate::grid::Grid) -> (Vec<f64>, Vec<f64>) {
        (grid.sample(|x| self.u(x)), grid.sample(|x| self.phi(x)))
    }
}

/// Constant growth `tau0` with fragmentation `beta0 * x` under the uniform
/// kernel:
/// `lambda = sqrt(beta0 tau0)`,
/// `U(x) = 2 sqrt(beta0/tau0) (X + X^2/2) exp(-X - X^2/2)`,
/// `phi(x) = (1 + X)/2`, where `X = sqrt(beta0/tau0) x`.
pub fn example_linear_beta(tau0: f64, beta0: f64) -> Result<AnalyticTriple, OracleError> {
    for (name, value) in [("tau0", tau0), ("beta0", beta0)] {
        if !(value > 0.0) {
            return Err(OracleError::NonPositive { name, value });
        }
    }
    let s = (beta0 / tau0).sqrt();
    Ok(AnalyticTriple {
        lambda: (beta0 * tau0).sqrt(),
        u: Box::new(move |x| {
            let big_x = s * x;
            2.0 * s * (big_x + 0.5 * big_x * big_x) * (-big_x - 0.5 * big_x * big_x).exp()
        }),
        phi: Box::new(move |x| 0.5 * (1.0 + s * x)),
        validity: "tau0 > 0, beta0 > 0, uniform kernel, n = 2, mu = 0, x_min = 0",
    })
}

/// Linear growth `tau0 * x` with fragmentation `beta0 * x^n` under the
/// uniform kernel:
/// `lambda = tau0`,
/// `U(x) = (beta0/(n tau0))^(1/n) * n / Gamma(1/n) * exp(-beta0 x^n / (n tau0))`,
/// `phi(x) = (beta0/(n tau0))^(1/n) * Gamma(1/n)/Gamma(2/n) * x`.
pub fn example_linear_tau(tau0: f64, beta0: f64, n: u32) -> Result<AnalyticTriple, OracleError> {
    for (name, value) in [("tau0", tau0), ("beta0", beta0), ("n", n as f64)] {
        if !(value > 0.0) {
            return Err(OracleError::NonPositive { name, value });
        }
    }
    let nf = n as f64;
    let root = (beta0 / (nf * tau0)).powf(1.0 / nf);
    let g1 = gamma(1.0 / nf);
    let g2 = gamma(2.0 / nf);
    let u_coeff = root * nf / g1;
    let phi_coeff = root * g1 / g2;
    let decay = beta0 / (nf * tau0);
    Ok(AnalyticTriple {
        lambda: tau0,
        u: Box::new(move |x| u_coeff * (-decay * x.powi(n as i32)).exp()),
        phi: Box::new(move |x| phi_coeff * x),
        validity: "tau0 > 0, beta0 > 0, integer n >= 1, uniform kernel, n_fragments = 2",
    })
}

/// Gamma function by the Lanczos approximation (g = 7, 9 coefficients),
/// accurate to about 1e-13 relative error for positive arguments.
#[allow(clippy::excessive_precision)]
pub fn gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection for small arguments
        return std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = COEFFS[0];
    for (i, c) in COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

/// Full eigendecomposition of a small dense operator: every eigenvalue and
/// the Perron pair.
pub struct SpectrumOracle {
    /// All eigenvalues as `(re, im)` pairs, sorted by descending real part.
    pub eigenvalues: Vec<(f64, f64)>,
    /// Eigenvalue of largest real part (real for these operators).
    pub perron_value: f64,
    /// Nonnegative eigenvector, normalised to unit weighted mass when grid
    /// weights are supplied, else to unit sum.
    pub perron_vector: Vec<f64>,
}

/// Brute-force reference for `n <= 400`: eigenvalues via an independent
/// QR-type decomposition, the Perron vector via shifted inverse iteration
/// with a pivoted dense LU local to this oracle.
pub fn dense_spectrum(op: &DiscreteOperator) -> Result<SpectrumOracle, OracleError> {
    let weights = op.grid().widths().to_vec();
    dense_spectrum_of(&op.to_dense(), Some(&weights))
}

/// Same oracle for a hand-built matrix (unit weights when `None`).
pub fn dense_spectrum_of(
    mat: &DenseMat,
    weights: Option<&[f64]>,
) -> Result<SpectrumOracle, OracleError> {
    let n = mat.n();
    if n > 400 {
        return Err(OracleError::TooLarge(n));
    }
    let a = DMatrix::from_fn(n, n, |i, j| mat.at(i, j));
    let eig = a.complex_eigenvalues();
    let mut eigenvalues: Vec<(f64, f64)> = eig.iter().map(|z| (z.re, z.im)).collect();
    eigenvalues.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

    let scale = mat
        .shifted_from(0.0)
        .max_abs_diag()
        .max(eigenvalues[0].0.abs())
        .max(1.0);
    let (re, im) = eigenvalues[0];
    if im.abs() > 1e-8 * scale {
        return Err(OracleError::NoPerronValue);
    }
    let perron_value = re;

    let vector = inverse_iterate(mat, perron_value, scale)?;
    let mass: f64 = match weights {
        Some(w) => vector.iter().zip(w).map(|(v, w)| v * w).sum(),
        None => vector.iter().sum(),
    };
    let perron_vector: Vec<f64> = vector.iter().map(|v| v / mass).collect();
    Ok(SpectrumOracle {
        eigenvalues,
        perron_value,
        perron_vector,
    })
}

/// Shifted inverse iteration with a partial-pivoting dense LU, independent of
/// the solver's Hessenberg machinery.
fn inverse_iterate(mat: &DenseMat, lambda: f64, scale: f64) -> Result<Vec<f64>, OracleError> {
    let n = mat.n();
    // (sigma I - A) with sigma a hair above the target keeps the shifted
    // matrix nonsingular and the iteration positivity-preserving
    for margin_exp in [-9, -7, -5] {
        let sigma = lambda + scale * 10f64.powi(margin_exp);
        let shifted = mat.shifted_from(sigma);
        let Some(lu) = PivotedLu::factor(shifted) else {
            continue;
        };
        let mut v = vec![1.0; n];
        let mut prev = v.clone();
        for _ in 0..200 {
            lu.solve(&mut v);
            let norm: f64 = v.iter().map(|x| x.abs()).sum();
            if norm == 0.0 || !norm.is_finite() {
                break;
            }
            let sign = if v.iter().sum::<f64>() < 0.0 {
                -1.0
            } else {
                1.0
            };
            for x in v.iter_mut() {
                *x *= sign / norm;
            }
            let diff: f64 = v.iter().zip(&prev).map(|(a, b)| (a - b).abs()).sum();
            if diff < 1e-14 {
                for x in v.iter_mut() {
                    if *x < 0.0 && *x > -1e-12 {
                        *x = 0.0;
                    }
                }
                return Ok(v);
            }
            prev.copy_from_slice(&v);
        }
    }
    Err(OracleError::VectorNotConverged)
}

/// Plain dense LU with partial pivoting; local to the oracle.
struct PivotedLu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl PivotedLu {
    fn factor(mat: DenseMat) -> Option<Self> {
        let n = mat.n();
        let mut lu = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                lu[i * n + j] = mat.at(i, j);
            }
        }
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[i * n + k].abs()))
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())?;
            if pmax == 0.0 {
                return None;
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let m = lu[i * n + k] / pivot;
                lu[i * n + k] = m;
                for j in k + 1..n {
                    lu[i * n + j] -= m * lu[k * n + j];
                }
            }
        }
        Some(Self { n, lu, perm })
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        let permuted: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        b.copy_from_slice(&permuted);
        for i in 1..n {
            let s: f64 = (0..i).map(|j| self.lu[i * n + j] * b[j]).sum();
            b[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[i * n + j] * b[j]).sum();
            b[i] = (b[i] - s) / self.lu[i * n + i];
        }
    }
}
