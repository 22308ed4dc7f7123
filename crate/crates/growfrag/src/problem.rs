//! Rates and fragmentation kernels of the growth-fragmentation model.
//!
//! A polymer of size `y` grows with rate `tau(y)`, fragments with rate
//! `beta(y)` into an average of `n` pieces whose sizes are distributed by the
//! kernel `kappa(x, y)`, and may degrade with rate `mu(y)`. All built-in
//! kernels are self-similar, `kappa(x, y) = kappa0(x/y) / y`, with `kappa0` a
//! probability measure on `[0, 1]` symmetric about `1/2`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::{self, QuadError};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("invalid rate: {0}")]
    InvalidRate(String),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("kernel parent size must be positive, got {0}")]
    NonPositiveParent(f64),
    #[error("quadrature failure: {0}")]
    Quadrature(#[from] QuadError),
}

// ---------------------------------------------------------------------------
// Rates
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RateKind {
    /// `c * x^p`
    PowerLaw {
        coeff: f64,
        exponent: f64,
    },
    /// `c0 + c1 * x`
    Affine {
        intercept: f64,
        slope: f64,
    },
    Constant {
        value: f64,
    },
    /// Piecewise-linear interpolation of `(x, value)` samples, constant
    /// extrapolation outside the table.
    Tabulated {
        xs: Vec<f64>,
        ys: Vec<f64>,
    },
}

/// A nonnegative rate on `[0, ∞)`, optionally vanishing below a support
/// infimum `b` (used for fragmentation rates with `Supp β = [b, ∞)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSpec {
    kind: RateKind,
    support_min: f64,
}

impl RateSpec {
    pub fn power_law(coeff: f64, exponent: f64) -> Result<Self, ProblemError> {
        if !(coeff >= 0.0) || !exponent.is_finite() {
            return Err(ProblemError::InvalidRate(format!(
                "power law needs coeff >= 0 and finite exponent, got {coeff}, {exponent}"
            )));
        }
        Ok(Self {
            kind: RateKind::PowerLaw { coeff, exponent },
            support_min: 0.0,
        })
    }

    pub fn affine(intercept: f64, slope: f64) -> Result<Self, ProblemError> {
        if !(intercept >= 0.0) || !(slope >= 0.0) {
            return Err(ProblemError::InvalidRate(format!(
                "affine rate needs nonnegative coefficients, got {intercept}, {slope}"
            )));
        }
        Ok(Self {
            kind: RateKind::Affine { intercept, slope },
            support_min: 0.0,
        })
    }

    pub fn constant(value: f64) -> Result<Self, ProblemError> {
        if !(value >= 0.0) {
            return Err(ProblemError::InvalidRate(format!(
                "constant rate must be nonnegative, got {value}"
            )));
        }
        Ok(Self {
            kind: RateKind::Constant { value },
            support_min: 0.0,
        })
    }

    /// The identically-zero rate (default death term).
    pub fn zero() -> Self {
        Self {
            kind: RateKind::Constant { value: 0.0 },
            support_min: 0.0,
        }
    }

    pub fn tabulated(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, ProblemError> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(ProblemError::InvalidRate(
                "tabulated rate needs at least two (x, y) samples".into(),
            ));
        }
        if !xs.windows(2).all(|w| w[0] < w[1]) {
            return Err(ProblemError::InvalidRate(
                "tabulated abscissae must be strictly increasing".into(),
            ));
        }
        if !xs.iter().all(|x| x.is_finite() && *x >= 0.0) || !ys.iter().all(|y| *y >= 0.0) {
            return Err(ProblemError::InvalidRate(
                "tabulated samples must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            kind: RateKind::Tabulated { xs, ys },
            support_min: 0.0,
        })
    }

    /// Declares `inf Supp = b`: the rate evaluates to 0 on `[0, b)`.
    pub fn with_support_min(mut self, b: f64) -> Result<Self, ProblemError> {
        if !(b >= 0.0) {
            return Err(ProblemError::InvalidRate(format!(
                "support infimum must be >= 0, got {b}"
            )));
        }
        self.support_min = b;
        Ok(self)
    }

    pub fn kind(&self) -> &RateKind {
        &self.kind
    }

    pub fn support_min(&self) -> f64 {
        self.support_min
    }

    /// Evaluates the rate. Closed-form kinds are exact; tabulated rates
    /// interpolate linearly and extrapolate by the nearest table value.
    pub fn eval(&self, x: f64) -> f64 {
        debug_assert!(x.is_finite() && x >= 0.0);
        if x < self.support_min {
            return 0.0;
        }
        match &self.kind {
            RateKind::PowerLaw { coeff, exponent } => {
                if *coeff == 0.0 {
                    0.0
                } else {
                    coeff * x.powf(*exponent)
                }
            }
            RateKind::Affine { intercept, slope } => intercept + slope * x,
            RateKind::Constant { value } => *value,
            RateKind::Tabulated { xs, ys } => interp_linear(xs, ys, x),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.kind {
            RateKind::PowerLaw { coeff, .. } => *coeff == 0.0,
            RateKind::Affine { intercept, slope } => *intercept == 0.0 && *slope == 0.0,
            RateKind::Constant { value } => *value == 0.0,
            RateKind::Tabulated { ys, .. } => ys.iter().all(|y| *y == 0.0),
        }
    }

    /// Local-boundedness exponent: the smallest `a0 >= 0` with
    /// `x^a0 * rate(x)` locally bounded near 0 (only power laws with negative
    /// exponent need `a0 > 0`).
    pub fn alpha0(&self) -> f64 {
        match &self.kind {
            RateKind::PowerLaw { exponent, .. } if *exponent < 0.0 => -exponent,
            _ => 0.0,
        }
    }

    /// Leading behaviour `c * x^p` as `x -> 0+` for analytic kinds (on the
    /// support), `None` for tabulated rates.
    pub fn leading_at_zero(&self) -> Option<(f64, f64)> {
        match &self.kind {
            RateKind::PowerLaw { coeff, exponent } => Some((*coeff, *exponent)),
            RateKind::Affine { intercept, slope } => {
                if *intercept > 0.0 {
                    Some((*intercept, 0.0))
                } else {
                    Some((*slope, 1.0))
                }
            }
            RateKind::Constant { value } => Some((*value, 0.0)),
            RateKind::Tabulated { .. } => None,
        }
    }

    /// Leading behaviour `c * x^p` as `x -> ∞` for analytic kinds.
    pub fn leading_at_infinity(&self) -> Option<(f64, f64)> {
        match &self.kind {
            RateKind::PowerLaw { coeff, exponent } => Some((*coeff, *exponent)),
            RateKind::Affine { intercept, slope } => {
                if *slope > 0.0 {
                    Some((*slope, 1.0))
                } else {
                    Some((*intercept, 0.0))
                }
            }
            RateKind::Constant { value } => Some((*value, 0.0)),
            RateKind::Tabulated { .. } => None,
        }
    }

    /// A characteristic size for probe grids; 1 for analytic kinds, the table
    /// extent for measured rates.
    pub fn scale_hint(&self) -> f64 {
        match &self.kind {
            RateKind::Tabulated { xs, .. } => xs.last().copied().unwrap_or(1.0).max(1.0),
            _ => 1.0f64.max(self.support_min),
        }
    }
}

fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    if x >= *xs.last().unwrap() {
        return *ys.last().unwrap();
    }
    let i = xs.partition_point(|&t| t <= x) - 1;
    let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + t * (ys[i + 1] - ys[i])
}

// ---------------------------------------------------------------------------
// Fragmentation kernels
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum KernelKind {
    /// `kappa0 = (delta_r + delta_{1-r}) / 2`, `r` in `[0, 1/2]`. `r = 1/2`
    /// is equal mitosis, `r = 0` the renewal kernel.
    Mitosis { r: f64 },
    /// `kappa0(z) = (alpha+1)/2 * (z^alpha + (1-z)^alpha)`, `alpha > -1`.
    Homogeneous { alpha: f64 },
    /// `kappa0 ≡ 1` on `[0, 1]`.
    Uniform,
    /// Density samples on `[0, 1]`, renormalised to unit mass at
    /// construction.
    TabulatedDensity { zs: Vec<f64>, ws: Vec<f64> },
    /// Convex combination `w * first + (1-w) * second`.
    Mixture {
        weight: f64,
        first: Box<KernelSpec>,
        second: Box<KernelSpec>,
    },
}

/// Self-similar fragmentation kernel together with the shattering envelope
/// parameters `(gamma, C)` of the bound
/// `∫_0^x kappa(z, y) dz <= min(1, C (x/y)^gamma)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    kind: KernelKind,
    gamma: f64,
    shattering_constant: f64,
}

impl KernelSpec {
    pub fn mitosis(r: f64) -> Result<Self, ProblemError> {
        if !(0.0..=0.5).contains(&r) {
            return Err(ProblemError::InvalidKernel(format!(
                "mitosis fraction must lie in [0, 1/2], got {r}"
            )));
        }
        // Mass below z jumps by 1/2 at z = r; C = 1/r makes gamma = 1 work.
        // The renewal kernel r = 0 has an atom at the origin: only gamma = 0.
        let (gamma, c) = if r > 0.0 { (1.0, 1.0 / r) } else { (0.0, 1.0) };
        Ok(Self {
            kind: KernelKind::Mitosis { r },
            gamma,
            shattering_constant: c,
        })
    }

    pub fn equal_mitosis() -> Self {
        Self::mitosis(0.5).unwrap()
    }

    pub fn renewal() -> Self {
        Self::mitosis(0.0).unwrap()
    }

    pub fn uniform() -> Self {
        Self {
            kind: KernelKind::Uniform,
            gamma: 1.0,
            shattering_constant: 1.0,
        }
    }

    pub fn homogeneous(alpha: f64) -> Result<Self, ProblemError> {
        if !(alpha > -1.0) || !alpha.is_finite() {
            return Err(ProblemError::InvalidKernel(format!(
                "homogeneous exponent must exceed -1, got {alpha}"
            )));
        }
        // Cumulative mass is [z^(1+a) + 1 - (1-z)^(1+a)] / 2. For a <= 0
        // subadditivity of z^(1+a) gives the bound z^(1+a); for a > 0 the
        // tangent line gives (2+a)/2 * z. The envelope exponent saturates at
        // 1: mass near zero never vanishes faster than the cell itself.
        let (gamma, c) = if alpha <= 0.0 {
            (1.0 + alpha, 1.0)
        } else {
            (1.0, 1.0 + 0.5 * alpha)
        };
        Ok(Self {
            kind: KernelKind::Homogeneous { alpha },
            gamma,
            shattering_constant: c,
        })
    }

    /// User-supplied density table with user-supplied shattering envelope.
    /// The table must be symmetric about 1/2; weights are renormalised to
    /// unit mass.
    pub fn tabulated_density(
        zs: Vec<f64>,
        ws: Vec<f64>,
        gamma: f64,
        shattering_constant: f64,
    ) -> Result<Self, ProblemError> {
        if zs.len() != ws.len() || zs.len() < 2 {
            return Err(ProblemError::InvalidKernel(
                "tabulated kernel needs at least two samples".into(),
            ));
        }
        if !zs.windows(2).all(|w| w[0] < w[1]) || zs[0] < 0.0 || *zs.last().unwrap() > 1.0 {
            return Err(ProblemError::InvalidKernel(
                "tabulated abscissae must increase strictly within [0, 1]".into(),
            ));
        }
        if !ws.iter().all(|w| *w >= 0.0) {
            return Err(ProblemError::InvalidKernel(
                "tabulated density must be nonnegative".into(),
            ));
        }
        if !(gamma >= 0.0) || !(shattering_constant > 0.0) {
            return Err(ProblemError::InvalidKernel(
                "shattering envelope needs gamma >= 0 and C > 0".into(),
            ));
        }
        // Symmetry about 1/2, checked at the tabulated nodes.
        for (&z, &w) in zs.iter().zip(&ws) {
            let mirrored = interp_linear(&zs, &ws, 1.0 - z);
            if (mirrored - w).abs() > 1e-9 * (1.0 + w.abs()) {
                return Err(ProblemError::InvalidKernel(format!(
                    "density not symmetric about 1/2 at z = {z}"
                )));
            }
        }
        let mass = quadrature::integrate(|z| interp_linear(&zs, &ws, z), 0.0, 1.0, 1e-13)?;
        if mass <= 0.0 {
            return Err(ProblemError::InvalidKernel("density has zero mass".into()));
        }
        let ws = ws.into_iter().map(|w| w / mass).collect();
        Ok(Self {
            kind: KernelKind::TabulatedDensity { zs, ws },
            gamma,
            shattering_constant,
        })
    }

    /// Convex combination `weight * first + (1 - weight) * second`.
    pub fn mixture(
        weight: f64,
        first: KernelSpec,
        second: KernelSpec,
    ) -> Result<Self, ProblemError> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(ProblemError::InvalidKernel(format!(
                "mixture weight must lie in [0, 1], got {weight}"
            )));
        }
        // The envelope of the combination: both cumulative bounds hold with
        // the smaller exponent since z^g decreases in g on [0, 1].
        let gamma = first.gamma.min(second.gamma);
        let c = weight * first.shattering_constant + (1.0 - weight) * second.shattering_constant;
        Ok(Self {
            kind: KernelKind::Mixture {
                weight,
                first: Box::new(first),
                second: Box::new(second),
            },
            gamma,
            shattering_constant: c,
        })
    }

    pub fn kind(&self) -> &KernelKind {
        &self.kind
    }

    /// Shattering envelope exponent of the cumulative-mass bound.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Shattering envelope constant `C`.
    pub fn shattering_constant(&self) -> f64 {
        self.shattering_constant
    }

    /// Infimum of the support of `kappa0`.
    pub fn support_infimum_z(&self) -> f64 {
        match &self.kind {
            KernelKind::Mitosis { r } => *r,
            KernelKind::Homogeneous { .. } | KernelKind::Uniform => 0.0,
            KernelKind::TabulatedDensity { zs, ws } => zs
                .iter()
                .zip(ws)
                .find(|(_, w)| **w > 0.0)
                .map(|(z, _)| *z)
                .unwrap_or(0.0),
            KernelKind::Mixture { first, second, .. } => {
                first.support_infimum_z().min(second.support_infimum_z())
            }
        }
    }

    /// Cumulative mass of `kappa0` on the half-open interval `[0, z)`.
    /// Atoms sitting exactly at `z` are excluded, which makes cell masses
    /// partition-additive on half-open cells.
    pub fn cdf0(&self, z: f64) -> f64 {
        match &self.kind {
            KernelKind::Mitosis { r } => {
                let mut m = 0.0;
                if *r < z {
                    m += 0.5;
                }
                if 1.0 - r < z {
                    m += 0.5;
                }
                m
            }
            KernelKind::Uniform => z.clamp(0.0, 1.0),
            KernelKind::Homogeneous { alpha } => {
                let z = z.clamp(0.0, 1.0);
                0.5 * (z.powf(alpha + 1.0) + 1.0 - (1.0 - z).powf(alpha + 1.0))
            }
            KernelKind::TabulatedDensity { zs, ws } => {
                let z = z.clamp(0.0, 1.0);
                quadrature::integrate(|s| interp_linear(zs, ws, s), 0.0, z, 1e-13)
                    .unwrap_or(f64::NAN)
            }
            KernelKind::Mixture {
                weight,
                first,
                second,
            } => weight * first.cdf0(z) + (1.0 - weight) * second.cdf0(z),
        }
    }

    /// Mass of `kappa(., y)` on `[a, b)`, with the half-open atom convention
    /// of [`Self::cdf0`].
    pub fn mass(&self, y: f64, a: f64, b: f64) -> Result<f64, ProblemError> {
        if !(y > 0.0) {
            return Err(ProblemError::NonPositiveParent(y));
        }
        if !(0.0 <= a && a <= b) {
            return Err(ProblemError::InvalidKernel(format!(
                "mass interval needs 0 <= a <= b, got [{a}, {b}]"
            )));
        }
        // Above the support everything is counted: cdf0 saturates at 1 for
        // z > 1, including a possible atom at z = 1.
        let hi = if b > y { 1.0 + 1e-9 } else { b / y };
        let lo = (a / y).min(1.0 + 1e-9);
        Ok((self.cdf0(hi) - self.cdf0(lo)).clamp(0.0, 1.0))
    }

    /// `p`-th scaled moment `∫ (x/y)^p kappa(x, y) dx = ∫ z^p kappa0(z) dz`,
    /// independent of `y` for self-similar kernels. Exact for atomic and
    /// closed-form densities, adaptive quadrature for tabulated ones.
    pub fn moment(&self, y: f64, p: u32) -> Result<f64, ProblemError> {
        if !(y > 0.0) {
            return Err(ProblemError::NonPositiveParent(y));
        }
        self.moment0(p)
    }

    fn moment0(&self, p: u32) -> Result<f64, ProblemError> {
        Ok(match &self.kind {
            KernelKind::Mitosis { r } => 0.5 * (r.powi(p as i32) + (1.0 - r).powi(p as i32)),
            KernelKind::Uniform => 1.0 / (p as f64 + 1.0),
            KernelKind::Homogeneous { alpha } => {
                // (alpha+1)/2 * [ 1/(p+1+alpha) + B(p+1, alpha+1) ] with the
                // Beta factor written as p! / prod_{k=1..p+1} (alpha + k).
                let mut beta_term = 1.0;
                for k in 1..=(p + 1) {
                    beta_term *= k as f64 / (alpha + k as f64);
                }
                beta_term /= p as f64 + 1.0;
                0.5 * (alpha + 1.0) * (1.0 / (p as f64 + 1.0 + alpha) + beta_term)
            }
            KernelKind::TabulatedDensity { zs, ws } => quadrature::integrate(
                |z| z.powi(p as i32) * interp_linear(zs, ws, z),
                0.0,
                1.0,
                1e-13,
            )?,
            KernelKind::Mixture {
                weight,
                first,
                second,
            } => weight * first.moment0(p)? + (1.0 - weight) * second.moment0(p)?,
        })
    }

    /// Evaluates the density `kappa0(z)` where one exists (`None` for purely
    /// atomic kernels). Used by symmetry diagnostics.
    pub fn density0(&self, z: f64) -> Option<f64> {
        match &self.kind {
            KernelKind::Mitosis { .. } => None,
            KernelKind::Uniform => Some(1.0),
            KernelKind::Homogeneous { alpha } => {
                Some(0.5 * (alpha + 1.0) * (z.powf(*alpha) + (1.0 - z).powf(*alpha)))
            }
            KernelKind::TabulatedDensity { zs, ws } => Some(interp_linear(zs, ws, z)),
            KernelKind::Mixture {
                weight,
                first,
                second,
            } => match (first.density0(z), second.density0(z)) {
                (Some(a), Some(b)) => Some(weight * a + (1.0 - weight) * b),
                _ => None,
            },
        }
    }
}

// ---------------------------------------------------------------------------
// Full model
// ---------------------------------------------------------------------------

/// The full fragmentation model: growth `tau`, fragmentation `beta` with
/// kernel `kappa`, mean fragment count `n`, death rate `mu` and minimal size
/// `x_min`. With `n = 2`, `mu ≡ 0` and `x_min = 0` this is the basic
/// two-fragment equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub tau: RateSpec,
    pub beta: RateSpec,
    pub kernel: KernelSpec,
    n_fragments: f64,
    pub death_mu: RateSpec,
    x_min: f64,
}

impl ProblemSpec {
    pub fn new(tau: RateSpec, beta: RateSpec, kernel: KernelSpec) -> Self {
        Self {
            tau,
            beta,
            kernel,
            n_fragments: 2.0,
            death_mu: RateSpec::zero(),
            x_min: 0.0,
        }
    }

    pub fn with_n_fragments(mut self, n: f64) -> Result<Self, ProblemError> {
        if !(n >= 2.0) {
            return Err(ProblemError::InvalidModel(format!(
                "mean fragment count must be >= 2, got {n}"
            )));
        }
        self.n_fragments = n;
        Ok(self)
    }

    pub fn with_death(mut self, mu: RateSpec) -> Self {
        self.death_mu = mu;
        self
    }

    pub fn with_x_min(mut self, x_min: f64) -> Result<Self, ProblemError> {
        if !(x_min >= 0.0) {
            return Err(ProblemError::InvalidModel(format!(
                "minimal size must be >= 0, got {x_min}"
            )));
        }
        self.x_min = x_min;
        Ok(self)
    }

    pub fn n_fragments(&self) -> f64 {
        self.n_fragments
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    /// Characteristic size for probe grids: ten times the largest rate scale.
    pub fn probe_scale(&self) -> f64 {
        self.tau
            .scale_hint()
            .max(self.beta.scale_hint())
            .max(self.x_min)
    }
}

/// First example of the explicit-solution family: constant growth with
/// linearly growing fragmentation under the uniform kernel.
pub fn linear_beta_problem(tau0: f64, beta0: f64) -> ProblemSpec {
    ProblemSpec::new(
        RateSpec::constant(tau0).expect("tau0 >= 0"),
        RateSpec::power_law(beta0, 1.0).expect("beta0 >= 0"),
        KernelSpec::uniform(),
    )
}

/// Second example family: linear growth `tau0 * x` with `beta0 * x^n`
/// fragmentation under the uniform kernel.
pub fn linear_tau_problem(tau0: f64, beta0: f64, n: u32) -> ProblemSpec {
    ProblemSpec::new(
        RateSpec::power_law(tau0, 1.0).expect("tau0 >= 0"),
        RateSpec::power_law(beta0, n as f64).expect("beta0 >= 0"),
        KernelSpec::uniform(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn linear_rate_evaluates_exactly() {
        let tau = RateSpec::power_law(1.0, 1.0).unwrap();
        assert_eq!(tau.eval(3.0), 3.0);
    }

    #[test]
    fn table1_family_rate() {
        let beta = RateSpec::power_law(1.0, 2.0).unwrap();
        assert_eq!(beta.eval(2.0), 4.0);
    }

    #[test]
    fn rate_vanishes_below_support() {
        let beta = RateSpec::constant(1.0)
            .unwrap()
            .with_support_min(1.0)
            .unwrap();
        assert_eq!(beta.eval(0.5), 0.0);
        assert_eq!(beta.eval(1.0), 1.0);
    }

    #[test]
    fn negative_coefficient_rejected() {
        assert!(RateSpec::power_law(-1.0, 1.0).is_err());
        assert!(RateSpec::constant(-0.1).is_err());
    }

    #[test]
    fn tabulated_rate_interpolates_and_extrapolates() {
        let r = RateSpec::tabulated(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 2.0]).unwrap();
        assert_relative_eq!(r.eval(0.5), 1.0);
        assert_eq!(r.eval(5.0), 2.0); // constant extrapolation
    }

    #[test]
    fn uniform_full_mass() {
        let k = KernelSpec::uniform();
        assert_relative_eq!(k.mass(2.0, 0.0, 2.0).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn mitosis_atom_in_window() {
        let k = KernelSpec::equal_mitosis();
        assert_eq!(k.mass(2.0, 0.9, 1.1).unwrap(), 1.0);
    }

    #[test]
    fn homogeneous_alpha1_half_mass() {
        // kappa0(z) = z + (1 - z) = 1: half the mass lies below the midpoint.
        let k = KernelSpec::homogeneous(1.0).unwrap();
        assert_relative_eq!(k.mass(1.0, 0.0, 0.5).unwrap(), 0.5, epsilon = 1e-13);
    }

    #[test]
    fn atom_on_endpoint_goes_right() {
        // Atom at 1.0; the cell whose left endpoint is the atom collects it.
        let k = KernelSpec::equal_mitosis();
        assert_eq!(k.mass(2.0, 0.5, 1.0).unwrap(), 0.0);
        assert_eq!(k.mass(2.0, 1.0, 1.5).unwrap(), 1.0);
    }

    #[test]
    fn uniform_second_moment() {
        let k = KernelSpec::uniform();
        let quad = quadrature::integrate(|z| z * z, 0.0, 1.0, 1e-14).unwrap();
        assert_relative_eq!(k.moment(1.0, 2).unwrap(), quad, epsilon = 1e-12);
        assert_relative_eq!(k.moment(3.7, 2).unwrap(), 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn equal_mitosis_second_moment_exact() {
        let k = KernelSpec::equal_mitosis();
        assert_eq!(k.moment(1.0, 2).unwrap(), 0.25);
    }

    #[test]
    fn mixture_second_moment_formula() {
        // rho * renewal + (1 - rho) * mitosis(r) has second moment
        // (1 - 2 r (1 - r)(1 - rho)) / 2.
        for (r, rho) in [(0.25, 0.5), (0.1, 0.3), (0.5, 0.9)] {
            let k =
                KernelSpec::mixture(rho, KernelSpec::renewal(), KernelSpec::mitosis(r).unwrap())
                    .unwrap();
            let expected = 0.5 * (1.0 - 2.0 * r * (1.0 - r) * (1.0 - rho));
            assert_relative_eq!(k.moment(1.0, 2).unwrap(), expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn homogeneous_moments_match_quadrature() {
        // nonnegative exponents only: the quadrature oracle cannot evaluate
        // the endpoint singularity, the closed form can
        for alpha in [0.0, 1.0, 2.5] {
            let k = KernelSpec::homogeneous(alpha).unwrap();
            for p in 0..4u32 {
                let quad = quadrature::integrate(
                    |z| {
                        z.powi(p as i32)
                            * 0.5
                            * (alpha + 1.0)
                            * (z.powf(alpha) + (1.0 - z).powf(alpha))
                    },
                    0.0,
                    1.0,
                    1e-13,
                )
                .unwrap();
                assert_relative_eq!(k.moment(1.0, p).unwrap(), quad, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn parent_size_must_be_positive() {
        let k = KernelSpec::uniform();
        assert!(k.mass(0.0, 0.0, 1.0).is_err());
        assert!(k.moment(-1.0, 0).is_err());
    }

    #[test]
    fn renewal_only_gamma_zero() {
        let k = KernelSpec::renewal();
        assert_eq!(k.gamma(), 0.0);
    }

    #[test]
    fn n_fragments_below_two_rejected() {
        let p = linear_beta_problem(1.0, 1.0);
        assert!(p.with_n_fragments(1.5).is_err());
    }

    fn arb_kernel() -> impl Strategy<Value = KernelSpec> {
        prop_oneof![
            (0.0..=0.5f64).prop_map(|r| KernelSpec::mitosis(r).unwrap()),
            (-0.9..3.0f64).prop_map(|a| KernelSpec::homogeneous(a).unwrap()),
            Just(KernelSpec::uniform()),
            ((0.0..=0.5f64), (0.0..1.0f64)).prop_map(|(r, w)| KernelSpec::mixture(
                w,
                KernelSpec::renewal(),
                KernelSpec::mitosis(r).unwrap()
            )
            .unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn zeroth_moment_is_one(k in arb_kernel(), y in 1e-6..1e6f64) {
            let m0 = k.moment(y, 0).unwrap();
            prop_assert!((m0 - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn first_moment_is_half(k in arb_kernel(), y in 1e-6..1e6f64) {
            let m1 = k.moment(y, 1).unwrap();
            prop_assert!((m1 - 0.5).abs() <= 1e-12);
        }

        #[test]
        fn moments_independent_of_parent(k in arb_kernel(), y1 in 1e-3..1e3f64, y2 in 1e-3..1e3f64, p in 0u32..5) {
            let a = k.moment(y1, p).unwrap();
            let b = k.moment(y2, p).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
        }

        #[test]
        fn density_symmetric_about_half(alpha in -0.9..3.0f64, z in 0.001..0.999f64) {
            let k = KernelSpec::homogeneous(alpha).unwrap();
            let a = k.density0(z).unwrap();
            let b = k.density0(1.0 - z).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }

        #[test]
        fn cumulative_mass_within_envelope(k in arb_kernel(), z in 1e-8..1.0f64) {
            // The shattering envelope min(1, C z^gamma) dominates cdf0.
            let bound = (k.shattering_constant() * z.powf(k.gamma())).min(1.0);
            prop_assert!(k.cdf0(z) <= bound + 1e-12);
        }

        #[test]
        fn mass_is_partition_additive(k in arb_kernel(), y in 0.1..10.0f64, cut in 0.0..1.0f64) {
            let mid = cut * y;
            let whole = k.mass(y, 0.0, 1.5 * y).unwrap();
            let left = k.mass(y, 0.0, mid).unwrap();
            let right = k.mass(y, mid, 1.5 * y).unwrap();
            prop_assert!((left + right - whole).abs() <= 1e-12);
        }
    }
}
