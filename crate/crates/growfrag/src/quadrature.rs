//! Adaptive quadrature used by kernel moments, the assumption audit and the
//! closed-form oracles.
//!
//! The workhorse is adaptive Simpson with a Richardson error estimate. For
//! integrability questions at the origin (`f ∈ L¹(0,a)`?) we integrate over
//! geometric shells `[a/2^(k+1), a/2^k]` and inspect the tail of the shell
//! series, which cannot prove divergence but can certify convergence to a
//! tolerance.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("quadrature did not converge on [{a}, {b}] (estimate {estimate:e})")]
    NotConverged { a: f64, b: f64, estimate: f64 },
    #[error("invalid integration bounds [{a}, {b}]")]
    BadBounds { a: f64, b: f64 },
}

const MAX_DEPTH: u32 = 48;
/// Subdivide at least this deep before trusting the error estimate, so
/// integrands concentrated away from the coarse nodes are not mistaken for
/// zero.
const MIN_DEPTH: u32 = 5;

/// Integral of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64, QuadError> {
    if !a.is_finite() || !b.is_finite() || b < a {
        return Err(QuadError::BadBounds { a, b });
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    adaptive(&f, a, b, fa, fm, fb, whole, tol.max(f64::MIN_POSITIVE), 0)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, QuadError> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let err = left + right - whole;
    if (depth >= MIN_DEPTH && err.abs() <= 15.0 * tol)
        || (b - a) < f64::EPSILON * (a.abs() + b.abs())
    {
        // Richardson correction of the composite estimate.
        return Ok(left + right + err / 15.0);
    }
    if depth >= MAX_DEPTH {
        return Err(QuadError::NotConverged {
            a,
            b,
            estimate: left + right,
        });
    }
    let half = 0.5 * tol;
    Ok(adaptive(f, a, m, fa, flm, fm, left, half, depth + 1)?
        + adaptive(f, m, b, fm, frm, fb, right, half, depth + 1)?)
}

/// Outcome of a shell integration towards the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShellVerdict {
    /// Tail contributions fell below tolerance: the integral is finite.
    Converged,
    /// Shell contributions stopped shrinking: the series looks divergent,
    /// but sampling cannot prove it.
    NotConverging,
}

#[derive(Debug, Clone)]
pub struct ShellIntegral {
    /// Sum of all shell contributions down to the last shell inspected.
    pub value: f64,
    pub verdict: ShellVerdict,
    /// Contribution of the last shell, for diagnostics.
    pub last_shell: f64,
}

/// Integrates `f` over `(0, a]` by geometric shells. `f` is never evaluated
/// at 0. Convergence requires the shell series tail to drop below
/// `tol * max(1, partial sum)`.
pub fn integrate_to_zero<F: Fn(f64) -> f64>(f: F, a: f64, tol: f64) -> ShellIntegral {
    debug_assert!(a > 0.0);
    let mut total = 0.0;
    let mut hi = a;
    let mut last = f64::INFINITY;
    for _ in 0..200 {
        let lo = 0.5 * hi;
        let shell = match integrate(&f, lo, hi, tol * 1e-3) {
            Ok(v) => v,
            Err(_) => {
                return ShellIntegral {
                    value: total,
                    verdict: ShellVerdict::NotConverging,
                    last_shell: last,
                }
            }
        };
        total += shell;
        last = shell;
        if shell.abs() <= tol * total.abs().max(1.0) * 1e-3 {
            return ShellIntegral {
                value: total,
                verdict: ShellVerdict::Converged,
                last_shell: shell,
            };
        }
        hi = lo;
    }
    ShellIntegral {
        value: total,
        verdict: ShellVerdict::NotConverging,
        last_shell: last,
    }
}

/// Compensated (Kahan-Neumaier) sum; used where reductions feed tight
/// tolerances.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}
