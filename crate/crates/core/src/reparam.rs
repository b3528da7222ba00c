//! Exact LEAR <-> ARMA(1,1) maps for equally spaced grids.
//!
//! When every subject is measured on a common spacing `h`, distances are
//! integer multiples of `h`. Measured in units of `h` the grid has
//! `d_min = 1`, and with `delta_d = delta / (d_max - d_min)`:
//!
//! ```text
//! rho_L^(1 + delta_d (m - 1)) = tau * rho_A^(m - 1),  tau = rho_L,  rho_A = rho_L^delta_d
//! ```
//!
//! at lag `m`. A grid with spacing `h != 1` is handled by changing units:
//! the LEAR parameters `(rho_L, delta)` on the original scale describe the
//! same matrix as `(rho_L^h, delta / h)` on the unit-spacing scale. The maps
//! in this module take and return parameters on the grid's own scale, so
//! the matrix identity holds on the grid the caller supplied.

use serde::Serialize;

use crate::correlation::{Arma11Params, LearKernel, LearParams};
use crate::error::{LearError, Result};
use crate::grid::MeasurementGrid;

/// Relative tolerance on consecutive spacings.
pub const SPACING_RTOL: f64 = 1e-9;

/// Outcome of checking a grid against the equally spaced special case.
///
/// `integer_distances` and `dmin_is_one` are judged after dividing by the
/// common spacing when one exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpecialCaseReport {
    pub equally_spaced: bool,
    pub integer_distances: bool,
    pub dmin_is_one: bool,
    pub spacing: Option<f64>,
    pub eligible: bool,
}

fn near(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= SPACING_RTOL * scale.abs().max(1.0)
}

fn consecutive_spacings(grid: &MeasurementGrid) -> impl Iterator<Item = f64> + '_ {
    grid.subjects()
        .iter()
        .flat_map(|t| t.windows(2).map(|w| w[1] - w[0]))
}

pub fn check_special_case(grid: &MeasurementGrid) -> SpecialCaseReport {
    let h = consecutive_spacings(grid).fold(f64::INFINITY, f64::min);
    let equally_spaced =
        h.is_finite() && consecutive_spacings(grid).all(|s| (s - h).abs() <= SPACING_RTOL * h);
    let unit = if equally_spaced { h } else { 1.0 };

    let integer_distances = grid.distances().all(|d| {
        let x = d / unit;
        x >= 1.0 - SPACING_RTOL && near(x, x.round(), x)
    });
    let dmin_is_one = near(grid.d_min() / unit, 1.0, 1.0);
    SpecialCaseReport {
        equally_spaced,
        integer_distances,
        dmin_is_one,
        spacing: equally_spaced.then_some(h),
        eligible: equally_spaced && integer_distances && dmin_is_one,
    }
}

/// A grid expressed in units of its common spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedGrid {
    pub grid: MeasurementGrid,
    /// Common spacing `h` of the original grid.
    pub spacing: f64,
}

impl NormalizedGrid {
    /// Correlation at integer lags `1..=max_lag` implied by LEAR parameters
    /// expressed on this normalized grid. Lag `m` is a separation of `m * h`
    /// on the original grid.
    pub fn lag_correlations(&self, params: &LearParams, max_lag: usize) -> Vec<f64> {
        let k = LearKernel::for_grid(params, &self.grid);
        (1..=max_lag).map(|m| k.correlation(m as f64)).collect()
    }
}

/// Divides every time by the common spacing so that consecutive
/// measurements are one unit apart; distances become exact integers.
pub fn normalize_grid(grid: &MeasurementGrid) -> Result<NormalizedGrid> {
    let report = check_special_case(grid);
    let h = report.spacing.ok_or_else(|| {
        LearError::NotSpecialCase("consecutive spacings differ across the grid".into())
    })?;
    let subjects = grid
        .subjects()
        .iter()
        .map(|t| {
            let origin = t[0] / h;
            t.iter()
                .map(|&x| origin + ((x - t[0]) / h).round())
                .collect()
        })
        .collect();
    Ok(NormalizedGrid {
        grid: grid.rescaled(subjects, h)?,
        spacing: h,
    })
}

/// LEAR parameters re-expressed for distances measured in units of `h`.
pub fn to_unit_spacing(params: &LearParams, h: f64) -> LearParams {
    if h == 1.0 {
        return *params;
    }
    LearParams {
        sigma2: params.sigma2,
        rho_l: params.rho_l.powf(h),
        delta: params.delta / h,
    }
}

/// Inverse of [`to_unit_spacing`].
pub fn from_unit_spacing(params: &LearParams, h: f64) -> LearParams {
    if h == 1.0 {
        return *params;
    }
    LearParams {
        sigma2: params.sigma2,
        rho_l: params.rho_l.powf(1.0 / h),
        delta: params.delta * h,
    }
}

/// Decay exponent normalized by the separation range.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct DeltaD(f64);

impl DeltaD {
    pub fn new(delta: f64, range: f64) -> Result<Self> {
        if !(range > 0.0) {
            return Err(LearError::DegenerateRange);
        }
        Ok(Self(delta / range))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Result of mapping LEAR parameters onto ARMA(1,1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Arma11Mapping {
    pub params: Arma11Params,
    /// False when `rho_L = 0`: every `rho_A` gives the identity correlation,
    /// and `rho_A` is set to 0 by convention.
    pub rho_a_identifiable: bool,
}

/// LEAR -> ARMA(1,1) on the canonical unit-spacing grid with the given range.
pub fn lear_to_arma_canonical(params: &LearParams, range: f64) -> Result<Arma11Mapping> {
    params.check()?;
    let delta_d = DeltaD::new(params.delta, range)?;
    if params.rho_l == 0.0 {
        return Ok(Arma11Mapping {
            params: Arma11Params { sigma2: params.sigma2, tau: 0.0, rho_a: 0.0 },
            rho_a_identifiable: false,
        });
    }
    Ok(Arma11Mapping {
        params: Arma11Params {
            sigma2: params.sigma2,
            tau: params.rho_l,
            // tiny rho_L with large delta underflows; stay inside (0, 1]
            rho_a: params.rho_l.powf(delta_d.value()).max(f64::from_bits(1)),
        },
        rho_a_identifiable: true,
    })
}

/// ARMA(1,1) -> LEAR on the canonical unit-spacing grid with the given range.
pub fn arma_to_lear_canonical(params: &Arma11Params, range: f64) -> Result<LearParams> {
    let Arma11Params { sigma2, tau, rho_a } = *params;
    if !(sigma2.is_finite() && tau.is_finite() && rho_a.is_finite()) || sigma2 <= 0.0 {
        return Err(LearError::InvalidParams(vec![if sigma2.is_finite() {
            crate::error::Violation::Sigma2NotPositive
        } else {
            crate::error::Violation::NonFinite
        }]));
    }
    if !(range > 0.0) {
        return Err(LearError::DegenerateRange);
    }
    if tau == 0.0 {
        return Err(LearError::Unidentifiable(
            "tau = 0 gives the identity correlation for every delta".into(),
        ));
    }
    if !(0.0..1.0).contains(&tau) {
        return Err(LearError::OutsideLearImage(format!("tau = {tau} is outside [0, 1)")));
    }
    if !(rho_a > 0.0 && rho_a <= 1.0) {
        return Err(LearError::OutsideLearImage(format!("rho_A = {rho_a} is outside (0, 1]")));
    }
    // both logs are <= 0, so delta >= 0; `+ 0.0` clears a negative zero
    let delta = range * rho_a.ln() / tau.ln() + 0.0;
    Ok(LearParams { sigma2, rho_l: tau, delta })
}

fn eligible_normalized(grid: &MeasurementGrid) -> Result<NormalizedGrid> {
    let report = check_special_case(grid);
    if !report.eligible {
        let why = if !report.equally_spaced {
            "consecutive spacings differ"
        } else if !report.dmin_is_one {
            "d_min is not one spacing unit"
        } else {
            "distances are not integer multiples of the spacing"
        };
        return Err(LearError::NotSpecialCase(why.into()));
    }
    normalize_grid(grid)
}

/// LEAR parameters on `grid`'s scale -> ARMA(1,1) parameters whose lag-indexed
/// covariance reproduces the LEAR covariance on `grid`.
pub fn lear_to_arma(params: &LearParams, grid: &MeasurementGrid) -> Result<Arma11Mapping> {
    params.check()?;
    let norm = eligible_normalized(grid)?;
    lear_to_arma_canonical(&to_unit_spacing(params, norm.spacing), norm.grid.range())
}

/// Inverse of [`lear_to_arma`]; result is on `grid`'s scale.
pub fn arma_to_lear(params: &Arma11Params, grid: &MeasurementGrid) -> Result<LearParams> {
    let norm = eligible_normalized(grid)?;
    let unit = arma_to_lear_canonical(params, norm.grid.range())?;
    Ok(from_unit_spacing(&unit, norm.spacing))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::{arma11_covariance, lear_covariance, max_abs_diff};
    use approx::assert_abs_diff_eq;

    fn grid(v: &[&[f64]]) -> MeasurementGrid {
        MeasurementGrid::new(v.iter().map(|t| t.to_vec()).collect()).unwrap()
    }

    fn lear(sigma2: f64, rho_l: f64, delta: f64) -> LearParams {
        LearParams { sigma2, rho_l, delta }
    }

    #[test]
    fn canonical_grid_is_eligible() {
        let r = check_special_case(&grid(&[&[1.0, 2.0, 3.0], &[1.0, 2.0]]));
        assert!(r.eligible);
        assert_eq!(r.spacing, Some(1.0));
    }

    #[test]
    fn spacing_two_is_eligible_after_normalization() {
        let g = grid(&[&[0.0, 2.0, 4.0]]);
        let r = check_special_case(&g);
        assert!(r.equally_spaced && r.integer_distances && r.dmin_is_one && r.eligible);
        assert_eq!(r.spacing, Some(2.0));
        let n = normalize_grid(&g).unwrap();
        assert_eq!(n.spacing, 2.0);
        assert_eq!((n.grid.d_min(), n.grid.d_max()), (1.0, 2.0));
    }

    #[test]
    fn unequal_spacing_is_not_eligible() {
        let r = check_special_case(&grid(&[&[1.0, 2.0, 4.0]]));
        assert!(!r.equally_spaced && !r.eligible);
        assert_eq!(r.spacing, None);
        assert!(matches!(
            normalize_grid(&grid(&[&[1.0, 2.0, 4.0]])),
            Err(LearError::NotSpecialCase(_))
        ));
    }

    #[test]
    fn spacing_must_be_common_across_subjects() {
        let r = check_special_case(&grid(&[&[0.0, 1.0, 2.0], &[0.0, 2.0]]));
        assert!(!r.eligible);
    }

    #[test]
    fn float_noise_within_tolerance() {
        let r = check_special_case(&grid(&[&[0.1, 0.2, 0.3, 0.4]]));
        assert!(r.eligible, "{r:?}");
    }

    #[test]
    fn normalization_examples() {
        let n = normalize_grid(&grid(&[&[1.0, 2.0, 3.0, 4.0]])).unwrap();
        assert_eq!(n.spacing, 1.0);
        assert_eq!(n.grid.subjects()[0], vec![1.0, 2.0, 3.0, 4.0]);

        let n = normalize_grid(&grid(&[&[5.0, 10.0, 15.0], &[5.0, 10.0]])).unwrap();
        assert_eq!(n.spacing, 5.0);
        let d: Vec<f64> = n.grid.distances().collect();
        assert_eq!(d, vec![1.0, 2.0, 1.0, 1.0]);
    }

    #[test]
    fn forward_map_examples() {
        let g = grid(&[&[1.0, 2.0, 3.0, 4.0]]);
        let m = lear_to_arma(&lear(1.0, 0.6, 2.0), &g).unwrap();
        assert_abs_diff_eq!(m.params.tau, 0.6);
        assert_abs_diff_eq!(m.params.rho_a, 0.6, epsilon = 1e-15);

        let m = lear_to_arma(&lear(1.0, 0.5, 0.0), &g).unwrap();
        assert_eq!((m.params.tau, m.params.rho_a), (0.5, 1.0));

        // 0.5^0.5 from mpmath
        let m = lear_to_arma(&lear(1.0, 0.5, 1.0), &g).unwrap();
        assert_abs_diff_eq!(m.params.rho_a, 0.707_106_781_186_547_5, epsilon = 1e-15);
    }

    #[test]
    fn forward_map_degenerate_cases() {
        let g = grid(&[&[1.0, 2.0, 3.0]]);
        let m = lear_to_arma(&lear(1.0, 0.0, 1.0), &g).unwrap();
        assert!(!m.rho_a_identifiable);
        assert_eq!((m.params.tau, m.params.rho_a), (0.0, 0.0));

        let flat = grid(&[&[0.0, 1.0], &[4.0, 5.0]]);
        assert!(matches!(
            lear_to_arma(&lear(1.0, 0.5, 1.0), &flat),
            Err(LearError::DegenerateRange)
        ));
        assert!(matches!(
            lear_to_arma(&lear(1.0, 0.5, 1.0), &grid(&[&[1.0, 2.0, 4.0]])),
            Err(LearError::NotSpecialCase(_))
        ));
    }

    #[test]
    fn inverse_map_examples() {
        let tiny = lear_to_arma_canonical(&LearParams { sigma2: 1.0, rho_l: 1e-9, delta: 15.0 }, 1.0).unwrap();
        assert!(tiny.params.rho_a > 0.0);
        assert!(arma_to_lear_canonical(&tiny.params, 1.0).unwrap().delta.is_finite());

        let r = arma_to_lear_canonical(&Arma11Params { sigma2: 1.0, tau: 0.6, rho_a: 0.6 }, 2.0).unwrap();
        assert_abs_diff_eq!(r.rho_l, 0.6);
        assert_abs_diff_eq!(r.delta, 2.0, epsilon = 1e-14);

        let r = arma_to_lear_canonical(&Arma11Params { sigma2: 1.0, tau: 0.5, rho_a: 1.0 }, 2.0).unwrap();
        assert_eq!((r.rho_l, r.delta), (0.5, 0.0));
        assert!(r.delta.is_sign_positive());

        let e = arma_to_lear_canonical(&Arma11Params { sigma2: 1.0, tau: 0.5, rho_a: -0.3 }, 2.0);
        assert!(matches!(e, Err(LearError::OutsideLearImage(_))));
        let e = arma_to_lear_canonical(&Arma11Params { sigma2: 1.0, tau: -0.2, rho_a: 0.3 }, 2.0);
        assert!(matches!(e, Err(LearError::OutsideLearImage(_))));
        let e = arma_to_lear_canonical(&Arma11Params { sigma2: 1.0, tau: 0.0, rho_a: 0.3 }, 2.0);
        assert!(matches!(e, Err(LearError::Unidentifiable(_))));
        let e = arma_to_lear_canonical(&Arma11Params { sigma2: 1.0, tau: 0.5, rho_a: 1.2 }, 2.0);
        assert!(matches!(e, Err(LearError::OutsideLearImage(_))));
    }

    #[test]
    fn non_unit_spacing_preserves_matrix() {
        let g = grid(&[&[0.0, 2.0, 4.0, 6.0, 8.0], &[2.0, 4.0]]);
        let p = lear(1.7, 0.45, 3.3);
        let m = lear_to_arma(&p, &g).unwrap();
        for s in 0..2 {
            let a = lear_covariance(&p, &g, s).unwrap();
            let b = arma11_covariance(&m.params, g.times(s).unwrap().len()).unwrap();
            assert!(max_abs_diff(&a, &b) < 1e-14);
        }
        let back = arma_to_lear(&m.params, &g).unwrap();
        assert_abs_diff_eq!(back.rho_l, p.rho_l, epsilon = 1e-14);
        assert_abs_diff_eq!(back.delta, p.delta, epsilon = 1e-12);
    }

    #[test]
    fn lag_readout_on_normalized_grid() {
        let g = grid(&[&[0.0, 3.0, 6.0, 9.0]]);
        let n = normalize_grid(&g).unwrap();
        let p = lear(1.0, 0.5, 2.0);
        let lags = n.lag_correlations(&p, 3);
        assert_abs_diff_eq!(lags[0], 0.5);
        assert_abs_diff_eq!(lags[2], 0.125, epsilon = 1e-15);
        // same matrix as the original-scale parameters
        let orig = from_unit_spacing(&p, n.spacing);
        let c = lear_covariance(&orig, &g, 0).unwrap();
        assert_abs_diff_eq!(c[(0, 2)], lags[1], epsilon = 1e-15);
    }

    #[test]
    fn delta_d_requires_positive_range() {
        assert_eq!(DeltaD::new(3.0, 2.0).unwrap().value(), 1.5);
        assert!(matches!(DeltaD::new(3.0, 0.0), Err(LearError::DegenerateRange)));
    }
}
