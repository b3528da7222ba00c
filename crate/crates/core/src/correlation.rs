//! LEAR and ARMA(1,1) correlation and covariance matrices.
//!
//! The LEAR correlation between two measurements separated by `d` is
//!
//! ```text
//! rho_L ^ (d_min + delta * (d - d_min) / (d_max - d_min))
//! ```
//!
//! with `d_min`/`d_max` pooled over every subject of the grid. `delta = 0`
//! gives compound symmetry at `rho_L^d_min`, `delta = d_max - d_min` the
//! continuous-time AR(1) `rho_L^d`, and `delta -> inf` approaches MA(1).
//!
//! The ARMA(1,1) correlation at lag `m >= 1` is `tau * rho_A^(m - 1)`.

use nalgebra::{Cholesky, DMatrix, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{LearError, Result, Violation};
use crate::grid::MeasurementGrid;

/// `(sigma2, rho_L, delta)` of the equal-variance LEAR model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearParams {
    pub sigma2: f64,
    pub rho_l: f64,
    pub delta: f64,
}

impl LearParams {
    /// Validated constructor.
    pub fn new(sigma2: f64, rho_l: f64, delta: f64) -> Result<Self> {
        let p = Self { sigma2, rho_l, delta };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<()> {
        let v = validate_params(self);
        if v.is_empty() {
            Ok(())
        } else {
            Err(LearError::InvalidParams(v))
        }
    }
}

/// `(sigma2, tau, rho_A)` of the ARMA(1,1) model.
///
/// Negative `tau`/`rho_A` are representable (the general ARMA(1,1) space)
/// but have no LEAR preimage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arma11Params {
    pub sigma2: f64,
    pub tau: f64,
    pub rho_a: f64,
}

impl Arma11Params {
    pub fn new(sigma2: f64, tau: f64, rho_a: f64) -> Result<Self> {
        let p = Self { sigma2, tau, rho_a };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.sigma2.is_finite() && self.tau.is_finite() && self.rho_a.is_finite()) {
            return Err(LearError::InvalidParams(vec![Violation::NonFinite]));
        }
        let mut v = Vec::new();
        if self.sigma2 <= 0.0 {
            v.push(Violation::Sigma2NotPositive);
        }
        if self.tau.abs() >= 1.0 || self.rho_a.abs() > 1.0 {
            v.push(Violation::ArmaOutOfRange);
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(LearError::InvalidParams(v))
        }
    }

    /// Whether the parameters lie in the image of the LEAR parameter space.
    pub fn in_lear_image(&self) -> bool {
        (0.0..1.0).contains(&self.tau) && self.rho_a > 0.0 && self.rho_a <= 1.0
    }
}

/// Reports every violated LEAR constraint; empty means the parameters are valid.
pub fn validate_params(params: &LearParams) -> Vec<Violation> {
    let LearParams { sigma2, rho_l, delta } = *params;
    if !(sigma2.is_finite() && rho_l.is_finite() && delta.is_finite()) {
        return vec![Violation::NonFinite];
    }
    let mut v = Vec::new();
    if sigma2 <= 0.0 {
        v.push(Violation::Sigma2NotPositive);
    }
    if rho_l < 0.0 {
        v.push(Violation::RhoNegative);
    }
    if rho_l >= 1.0 {
        v.push(Violation::RhoNotBelowOne);
    }
    if delta < 0.0 {
        v.push(Violation::DeltaNegative);
    }
    v
}

/// Symmetric, unit-diagonal correlation matrix of one subject.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix(DMatrix<f64>);

impl CorrelationMatrix {
    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// Cholesky factor; fails with `NotPositiveDefinite` on any non-positive pivot.
    pub fn cholesky(&self) -> Result<Cholesky<f64, Dyn>> {
        cholesky(&self.0)
    }

    /// `sigma2` times the correlation.
    pub fn scaled(&self, sigma2: f64) -> DMatrix<f64> {
        &self.0 * sigma2
    }
}

/// Cholesky factorization with zero pivot tolerance and no regularization.
pub fn cholesky(m: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m.clone()).ok_or(LearError::NotPositiveDefinite)
}

/// LEAR correlation as a function of separation, detached from any grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearKernel {
    rho_l: f64,
    delta: f64,
    d_min: f64,
    range: f64,
}

impl LearKernel {
    pub fn new(rho_l: f64, delta: f64, d_min: f64, d_max: f64) -> Self {
        Self {
            rho_l,
            delta,
            d_min,
            range: d_max - d_min,
        }
    }

    pub fn for_grid(params: &LearParams, grid: &MeasurementGrid) -> Self {
        Self::new(params.rho_l, params.delta, grid.d_min(), grid.d_max())
    }

    /// `d_min + delta * (d - d_min) / (d_max - d_min)`; the fraction is 0 when
    /// the range is 0.
    pub fn exponent(&self, d: f64) -> f64 {
        let frac = if self.range > 0.0 {
            (d - self.d_min) / self.range
        } else {
            0.0
        };
        self.d_min + self.delta * frac
    }

    pub fn correlation(&self, d: f64) -> f64 {
        self.rho_l.powf(self.exponent(d))
    }

    /// Correlation matrix for one subject's sorted times.
    pub fn matrix(&self, times: &[f64]) -> DMatrix<f64> {
        let p = times.len();
        let mut m = DMatrix::identity(p, p);
        for j in 0..p {
            for k in (j + 1)..p {
                let r = self.correlation(times[k] - times[j]);
                m[(j, k)] = r;
                m[(k, j)] = r;
            }
        }
        m
    }
}

/// Correlation at lags `0..p` for ARMA(1,1): `1, tau, tau*rho_A, tau*rho_A^2, ...`.
///
/// Built by repeated multiplication so `tau == rho_A` reproduces the AR(1)
/// sequence bit for bit.
pub fn arma11_lag_correlations(tau: f64, rho_a: f64, p: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(p);
    if p == 0 {
        return c;
    }
    c.push(1.0);
    let mut r = tau;
    for _ in 1..p {
        c.push(r);
        r *= rho_a;
    }
    c
}

/// ARMA(1,1) correlation matrix of dimension `p`, lags taken as `|j - k|`.
pub fn arma11_correlation_matrix(tau: f64, rho_a: f64, p: usize) -> DMatrix<f64> {
    let c = arma11_lag_correlations(tau, rho_a, p);
    DMatrix::from_fn(p, p, |j, k| c[j.abs_diff(k)])
}

/// LEAR correlation matrix `Gamma_i` for subject `subject_index` of the grid.
pub fn lear_correlation(
    params: &LearParams,
    grid: &MeasurementGrid,
    subject_index: usize,
) -> Result<CorrelationMatrix> {
    params.check()?;
    let times = grid.times(subject_index)?;
    Ok(CorrelationMatrix(LearKernel::for_grid(params, grid).matrix(times)))
}

/// Equal-variance LEAR covariance `sigma2 * Gamma_i`.
pub fn lear_covariance(
    params: &LearParams,
    grid: &MeasurementGrid,
    subject_index: usize,
) -> Result<DMatrix<f64>> {
    Ok(lear_correlation(params, grid, subject_index)?.scaled(params.sigma2))
}

/// ARMA(1,1) covariance: `sigma2` on the diagonal, `sigma2 * tau * rho_A^(|j-k|-1)` off it.
pub fn arma11_covariance(params: &Arma11Params, p: usize) -> Result<DMatrix<f64>> {
    if p < 1 {
        return Err(LearError::InvalidSize(format!("p must be >= 1, got {p}")));
    }
    params.check()?;
    Ok(arma11_correlation_matrix(params.tau, params.rho_a, p) * params.sigma2)
}

/// Largest absolute elementwise difference; infinite on shape mismatch.
pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
