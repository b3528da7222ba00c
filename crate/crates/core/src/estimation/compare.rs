//! Fits the same data under both parameterizations and reports how far the
//! two estimated covariance structures end up from each other.
//!
//! The parameterizations describe the same family of matrices on equally
//! spaced grids, but the optimizer sees differently shaped surfaces, so the
//! two paths need not land on the same estimate. Disagreement is reported,
//! never reconciled.

use serde::{Deserialize, Serialize};

use super::fit::{fit, Estimates, FitOptions, FitResult, Parameterization};
use super::likelihood::Criterion;
use crate::correlation::{max_abs_diff, Arma11Params, LearParams};
use crate::data::RepeatedMeasuresData;
use crate::error::{LearError, Result};
use crate::reparam::{arma_to_lear, check_special_case, lear_to_arma};

pub const LOGLIK_AGREEMENT_TOL: f64 = 1e-4;
pub const COVARIANCE_AGREEMENT_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub criterion: Criterion,
    pub lear: FitResult,
    pub arma11: FitResult,
    /// `max_loglik(LEAR) - max_loglik(ARMA11)`.
    pub loglik_difference: f64,
    pub reference_subject: String,
    pub lear_covariance: Vec<Vec<f64>>,
    pub arma11_covariance: Vec<Vec<f64>>,
    pub max_abs_covariance_difference: f64,
    /// LEAR estimate pushed through the forward map.
    pub lear_as_arma11: Option<Arma11Params>,
    /// ARMA(1,1) estimate pulled back to LEAR; absent outside the LEAR image.
    pub arma11_as_lear: Option<LearParams>,
    pub agree: bool,
    pub notes: Vec<String>,
}

fn rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn compare_parameterizations(
    data: &RepeatedMeasuresData,
    criterion: Criterion,
    options: &FitOptions,
) -> Result<ComparisonReport> {
    let grid = data.require_grid()?;
    if !check_special_case(grid).eligible {
        return Err(LearError::NotSpecialCase(
            "comparison needs an equally spaced grid".into(),
        ));
    }
    let lear = fit(data, Parameterization::Lear, criterion, options)?;
    let arma11 = fit(data, Parameterization::Arma11, criterion, options)?;

    // first subject with the most measurements
    let reference = data
        .subjects()
        .iter()
        .enumerate()
        .fold(0, |best, (i, s)| if s.len() > data.subjects()[best].len() { i } else { best });
    let cov_l = lear.covariance(data, reference)?;
    let cov_a = arma11.covariance(data, reference)?;
    let max_diff = max_abs_diff(&cov_l, &cov_a);
    let loglik_difference = lear.max_loglik - arma11.max_loglik;

    let mut notes = Vec::new();
    let lear_as_arma11 = match &lear.estimates {
        Estimates::Lear(p) => match lear_to_arma(p, grid) {
            Ok(m) => {
                if !m.rho_a_identifiable {
                    notes.push("LEAR rho_L is 0; mapped rho_A is not identifiable".into());
                }
                Some(m.params)
            }
            Err(e) => {
                notes.push(format!("LEAR estimate could not be mapped: {e}"));
                None
            }
        },
        Estimates::Arma11(_) => None,
    };
    let arma11_as_lear = match &arma11.estimates {
        Estimates::Arma11(p) => match arma_to_lear(p, grid) {
            Ok(l) => Some(l),
            Err(e) => {
                notes.push(format!("ARMA(1,1) estimate has no LEAR preimage: {e}"));
                None
            }
        },
        Estimates::Lear(_) => None,
    };
    for (name, r) in [("LEAR", &lear), ("ARMA11", &arma11)] {
        if !r.converged {
            notes.push(format!("{name} optimizer did not converge after {} iterations", r.iterations));
        }
        if !r.boundary_flags.is_empty() {
            let flags: Vec<&str> = r.boundary_flags.iter().map(|f| f.as_str()).collect();
            notes.push(format!("{name} optimum on the search-box edge: {}", flags.join(", ")));
        }
    }
    let agree = loglik_difference.abs() < LOGLIK_AGREEMENT_TOL && max_diff < COVARIANCE_AGREEMENT_TOL;
    if !agree {
        notes.push(format!(
            "parameterizations disagree: |loglik difference| = {:.3e}, max covariance difference = {:.3e}",
            loglik_difference.abs(),
            max_diff
        ));
    }

    Ok(ComparisonReport {
        criterion,
        reference_subject: data.subjects()[reference].id.clone(),
        lear_covariance: rows(&cov_l),
        arma11_covariance: rows(&cov_a),
        max_abs_covariance_difference: max_diff,
        loglik_difference,
        lear,
        arma11,
        lear_as_arma11,
        arma11_as_lear,
        agree,
        notes,
    })
}
