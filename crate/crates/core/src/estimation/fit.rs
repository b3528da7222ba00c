use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::likelihood::{CorrParams, Criterion, ProfileLikelihood};
use super::nelder_mead::{self, NelderMeadOptions};
use crate::correlation::{arma11_covariance, lear_covariance, Arma11Params, LearParams};
use crate::data::RepeatedMeasuresData;
use crate::error::{LearError, Result};
use crate::reparam::check_special_case;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parameterization {
    #[serde(rename = "LEAR")]
    Lear,
    #[serde(rename = "ARMA11")]
    Arma11,
}

/// Search box and optimizer settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Points per axis of the coarse scan.
    pub grid_points: usize,
    /// Upper bound for `rho_L` and `tau`.
    pub rho_cap: f64,
    /// Upper bound for `rho_A`.
    pub rho_a_cap: f64,
    /// Upper bound for `delta`, as a multiple of `d_max - d_min`.
    pub delta_cap: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Search `tau` and `rho_A` over `[-rho_cap, cap]` instead of `[0, cap]`.
    pub widen_arma: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            grid_points: 21,
            rho_cap: 0.99,
            rho_a_cap: 1.0,
            delta_cap: 5.0,
            max_iterations: 1000,
            tolerance: 1e-10,
            widen_arma: false,
        }
    }
}

impl FitOptions {
    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(LearError::Config(m.to_string()));
        if self.grid_points < 2 {
            return bad("grid_points must be >= 2");
        }
        if !(self.rho_cap > 0.0 && self.rho_cap < 1.0) {
            return bad("rho_cap must lie in (0, 1)");
        }
        if !(self.rho_a_cap > 0.0 && self.rho_a_cap <= 1.0) {
            return bad("rho_a_cap must lie in (0, 1]");
        }
        if !(self.delta_cap > 0.0 && self.delta_cap.is_finite()) {
            return bad("delta_cap must be positive");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be >= 1");
        }
        if !(self.tolerance > 0.0) {
            return bad("tolerance must be positive");
        }
        Ok(())
    }
}

/// Optimum within `BOUNDARY_TOL` of a box edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryFlag {
    /// `rho_L` (or `tau`) at its lower bound.
    RhoAtLower,
    RhoAtUpperCap,
    /// `delta` (or `rho_A`) at its lower bound.
    DeltaAtLower,
    DeltaAtUpperCap,
}

impl BoundaryFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryFlag::RhoAtLower => "rho_at_lower",
            BoundaryFlag::RhoAtUpperCap => "rho_at_upper_cap",
            BoundaryFlag::DeltaAtLower => "delta_at_lower",
            BoundaryFlag::DeltaAtUpperCap => "delta_at_upper_cap",
        }
    }
}

pub const BOUNDARY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Estimates {
    Lear(LearParams),
    Arma11(Arma11Params),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub parameterization: Parameterization,
    pub criterion: Criterion,
    pub estimates: Estimates,
    pub beta_hat: Vec<f64>,
    pub max_loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
    pub boundary_flags: Vec<BoundaryFlag>,
    /// `[lower, upper]` searched for the first (`rho_L`/`tau`) and second
    /// (`delta`/`rho_A`) correlation parameter.
    pub bounds: [[f64; 2]; 2],
    /// Whether the estimates lie in the LEAR parameter space or its ARMA image.
    pub in_lear_image: bool,
}

impl FitResult {
    /// Fitted covariance for one subject of `data`.
    pub fn covariance(&self, data: &RepeatedMeasuresData, subject: usize) -> Result<DMatrix<f64>> {
        let s = data.subjects().get(subject).ok_or(LearError::SubjectOutOfRange {
            index: subject,
            count: data.n_subjects(),
        })?;
        match &self.estimates {
            Estimates::Lear(p) => lear_covariance(p, data.require_grid()?, subject),
            Estimates::Arma11(p) => arma11_covariance(p, s.len()),
        }
    }

    pub fn corr_params(&self) -> CorrParams {
        match self.estimates {
            Estimates::Lear(p) => CorrParams::Lear { rho_l: p.rho_l, delta: p.delta },
            Estimates::Arma11(p) => CorrParams::Arma11 { tau: p.tau, rho_a: p.rho_a },
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Transform {
    /// `lo + (hi - lo) * logistic(z)`.
    Logit,
    /// `lo + exp(z)`, infeasible above `hi`.
    Log,
}

#[derive(Debug, Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    transform: Transform,
}

impl Axis {
    fn width(&self) -> f64 {
        self.hi - self.lo
    }

    fn scan(&self, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    self.hi
                } else {
                    self.lo + self.width() * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }

    fn to_internal(&self, v: f64) -> f64 {
        match self.transform {
            Transform::Logit => {
                let s = (v - self.lo) / self.width();
                (s / (1.0 - s)).ln()
            }
            Transform::Log => (v - self.lo).ln(),
        }
    }

    fn to_external(&self, z: f64) -> Option<f64> {
        let v = match self.transform {
            Transform::Logit => self.lo + self.width() / (1.0 + (-z).exp()),
            Transform::Log => self.lo + z.exp(),
        };
        (v >= self.lo && v <= self.hi && v.is_finite()).then_some(v)
    }
}

struct Problem<'a> {
    lik: ProfileLikelihood<'a>,
    parameterization: Parameterization,
}

impl Problem<'_> {
    fn params(&self, a: f64, b: f64) -> CorrParams {
        match self.parameterization {
            Parameterization::Lear => CorrParams::Lear { rho_l: a, delta: b },
            Parameterization::Arma11 => CorrParams::Arma11 { tau: a, rho_a: b },
        }
    }

    /// Log-likelihood, or `None` where it is undefined (not PD, singular).
    fn loglik(&self, a: f64, b: f64) -> Option<f64> {
        self.lik.loglik(&self.params(a, b)).ok().filter(|v| v.is_finite())
    }
}

/// Maximizes the profile (restricted) likelihood over the correlation
/// parameters: a coarse scan of the search box, then Nelder-Mead on
/// transformed coordinates started from the best scan point, then snapping
/// onto nearby box edges where that does not lower the likelihood.
pub fn fit(
    data: &RepeatedMeasuresData,
    parameterization: Parameterization,
    criterion: Criterion,
    options: &FitOptions,
) -> Result<FitResult> {
    options.check()?;
    let grid = data.require_grid()?;
    let axes = match parameterization {
        Parameterization::Lear => {
            let range = grid.range();
            if !(range > 0.0) {
                return Err(LearError::DegenerateRange);
            }
            [
                Axis { lo: 0.0, hi: options.rho_cap, transform: Transform::Logit },
                Axis { lo: 0.0, hi: options.delta_cap * range, transform: Transform::Log },
            ]
        }
        Parameterization::Arma11 => {
            if !check_special_case(grid).eligible {
                return Err(LearError::NotSpecialCase(
                    "ARMA(1,1) fitting needs an equally spaced grid".into(),
                ));
            }
            let (lo_tau, lo_rho) = if options.widen_arma {
                (-options.rho_cap, -options.rho_a_cap)
            } else {
                (0.0, 0.0)
            };
            [
                Axis { lo: lo_tau, hi: options.rho_cap, transform: Transform::Logit },
                Axis { lo: lo_rho, hi: options.rho_a_cap, transform: Transform::Logit },
            ]
        }
    };
    let problem = Problem {
        lik: ProfileLikelihood::new(data, criterion),
        parameterization,
    };

    // coarse scan; ties go to the smallest second parameter, then the smallest first
    let n = options.grid_points;
    let (scan_a, scan_b) = (axes[0].scan(n), axes[1].scan(n));
    let mut best: Option<(f64, f64, f64)> = None;
    let mut evaluations = 0;
    for &b in &scan_b {
        for &a in &scan_a {
            evaluations += 1;
            if let Some(ll) = problem.loglik(a, b) {
                if best.is_none_or(|(_, _, v)| ll > v) {
                    best = Some((a, b, ll));
                }
            }
        }
    }
    let (a0, b0, ll0) = best.ok_or_else(|| {
        LearError::FitFailed("likelihood undefined at every scan point".into())
    })?;

    // local refinement from an interior start
    let start = |axis: &Axis, v: f64| {
        let half = 0.5 * axis.width() / (n - 1) as f64;
        axis.to_internal(v.clamp(axis.lo + half, axis.hi - half))
    };
    let objective = |z: &[f64]| -> f64 {
        match (axes[0].to_external(z[0]), axes[1].to_external(z[1])) {
            (Some(a), Some(b)) => problem.loglik(a, b).map_or(f64::INFINITY, |v| -v),
            _ => f64::INFINITY,
        }
    };
    let nm_opts = NelderMeadOptions {
        max_iterations: options.max_iterations,
        ftol: options.tolerance,
        initial_step: 0.5,
    };
    let mut z = vec![start(&axes[0], a0), start(&axes[1], b0)];
    let mut f = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    // restart until a fresh simplex no longer improves the optimum
    for _ in 0..4 {
        let budget = options.max_iterations.saturating_sub(iterations);
        if budget == 0 {
            converged = false;
            break;
        }
        let r = nelder_mead::minimize(objective, &z, &NelderMeadOptions { max_iterations: budget, ..nm_opts });
        iterations += r.iterations;
        evaluations += r.evaluations;
        let improved = f.is_infinite() || f - r.f > options.tolerance * (1.0 + r.f.abs());
        if r.f <= f {
            z = r.x;
            f = r.f;
        }
        converged = r.converged;
        if !r.converged || !improved {
            break;
        }
    }

    let mut point = match (axes[0].to_external(z[0]), axes[1].to_external(z[1])) {
        (Some(a), Some(b)) if f.is_finite() => (a, b, -f),
        _ => (a0, b0, ll0),
    };
    if point.2 < ll0 {
        point = (a0, b0, ll0);
    }

    // snap onto nearby edges
    for axis_index in 0..2 {
        let axis = axes[axis_index];
        let snap = 1e-3 * axis.width();
        let current = if axis_index == 0 { point.0 } else { point.1 };
        for edge in [axis.lo, axis.hi] {
            if (current - edge).abs() <= snap && current != edge {
                let (a, b) = if axis_index == 0 { (edge, point.1) } else { (point.0, edge) };
                evaluations += 1;
                if let Some(ll) = problem.loglik(a, b) {
                    if ll >= point.2 {
                        point = (a, b, ll);
                    }
                }
            }
        }
    }

    let (a, b, _) = point;
    let eval = problem.lik.evaluate(&problem.params(a, b))?;
    let mut boundary_flags = Vec::new();
    if (a - axes[0].lo).abs() <= BOUNDARY_TOL {
        boundary_flags.push(BoundaryFlag::RhoAtLower);
    }
    if (axes[0].hi - a).abs() <= BOUNDARY_TOL {
        boundary_flags.push(BoundaryFlag::RhoAtUpperCap);
    }
    if (b - axes[1].lo).abs() <= BOUNDARY_TOL {
        boundary_flags.push(BoundaryFlag::DeltaAtLower);
    }
    if (axes[1].hi - b).abs() <= BOUNDARY_TOL {
        boundary_flags.push(BoundaryFlag::DeltaAtUpperCap);
    }
    let (estimates, in_lear_image) = match parameterization {
        Parameterization::Lear => (
            Estimates::Lear(LearParams { sigma2: eval.sigma2_hat, rho_l: a, delta: b }),
            true,
        ),
        Parameterization::Arma11 => {
            let p = Arma11Params { sigma2: eval.sigma2_hat, tau: a, rho_a: b };
            (Estimates::Arma11(p), p.in_lear_image())
        }
    };
    Ok(FitResult {
        parameterization,
        criterion,
        estimates,
        beta_hat: eval.beta_hat.iter().copied().collect(),
        max_loglik: eval.loglik,
        converged,
        iterations,
        evaluations,
        boundary_flags,
        bounds: [[axes[0].lo, axes[0].hi], [axes[1].lo, axes[1].hi]],
        in_lear_image,
    })
}
