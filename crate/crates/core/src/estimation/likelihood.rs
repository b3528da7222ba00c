//! Profile (restricted) Gaussian log-likelihood with `beta` and `sigma2`
//! concentrated out.
//!
//! For correlation parameters `theta` with per-subject correlation
//! `Gamma_i(theta) = L_i L_i^T`:
//!
//! ```text
//! beta_hat   = (sum X_i' G_i^-1 X_i)^-1 sum X_i' G_i^-1 y_i
//! Q          = sum r_i' G_i^-1 r_i,           r_i = y_i - X_i beta_hat
//! sigma2_hat = Q / M,                         M = n (ML) or n - q (REML)
//! ML   : -1/2 [ n (log 2pi + log sigma2_hat + 1) + sum log|G_i| ]
//! REML : -1/2 [ (n-q)(log 2pi + log sigma2_hat + 1) + sum log|G_i| + log|sum X_i' G_i^-1 X_i| ]
//! ```
//!
//! Subjects sharing a time vector share one factorization. Groups and
//! members are visited in a canonical order derived from the data values,
//! so the result does not depend on how subjects were ordered on input and
//! is identical for any thread count.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::{arma11_correlation_matrix, cholesky, LearKernel};
use crate::data::RepeatedMeasuresData;
use crate::error::{LearError, Result};
use crate::reparam::check_special_case;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Criterion {
    #[serde(rename = "ML")]
    Ml,
    #[serde(rename = "REML")]
    Reml,
}

/// Correlation parameters of either parameterization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CorrParams {
    Lear { rho_l: f64, delta: f64 },
    Arma11 { tau: f64, rho_a: f64 },
}

impl CorrParams {
    fn check(&self) -> Result<()> {
        use crate::error::Violation;
        match *self {
            CorrParams::Lear { rho_l, delta } => {
                let v = crate::correlation::validate_params(&crate::correlation::LearParams {
                    sigma2: 1.0,
                    rho_l,
                    delta,
                });
                if v.is_empty() {
                    Ok(())
                } else {
                    Err(LearError::InvalidParams(v))
                }
            }
            CorrParams::Arma11 { tau, rho_a } => {
                if !(tau.is_finite() && rho_a.is_finite()) {
                    Err(LearError::InvalidParams(vec![Violation::NonFinite]))
                } else if tau.abs() >= 1.0 || rho_a.abs() > 1.0 {
                    Err(LearError::InvalidParams(vec![Violation::ArmaOutOfRange]))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Everything computed at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileEvaluation {
    pub loglik: f64,
    pub sigma2_hat: f64,
    pub beta_hat: DVector<f64>,
    /// `sum r_i' Gamma_i^-1 r_i`.
    pub quad_form: f64,
    /// `sum log|Gamma_i|`.
    pub logdet_corr: f64,
    /// `log|sum X_i' Gamma_i^-1 X_i|`.
    pub logdet_info: f64,
    /// Divisor `M` of the variance estimate.
    pub df: usize,
}

#[derive(Debug)]
struct PatternGroup {
    times: Vec<f64>,
    members: Vec<usize>,
}

fn bits(v: impl Iterator<Item = f64>) -> Vec<u64> {
    v.map(f64::to_bits).collect()
}

/// Reusable evaluator of the profile likelihood over one data set.
#[derive(Debug)]
pub struct ProfileLikelihood<'a> {
    data: &'a RepeatedMeasuresData,
    criterion: Criterion,
    groups: Vec<PatternGroup>,
    arma_eligibility: std::result::Result<(), String>,
}

impl<'a> ProfileLikelihood<'a> {
    pub fn new(data: &'a RepeatedMeasuresData, criterion: Criterion) -> Self {
        let mut by_times: BTreeMap<Vec<u64>, Vec<usize>> = BTreeMap::new();
        for (i, s) in data.subjects().iter().enumerate() {
            by_times.entry(bits(s.times.iter().copied())).or_default().push(i);
        }
        let groups = by_times
            .into_values()
            .map(|mut members| {
                members.sort_by_cached_key(|&i| {
                    let s = &data.subjects()[i];
                    (bits(s.y.iter().copied()), bits(s.x.iter().copied()))
                });
                PatternGroup {
                    times: data.subjects()[members[0]].times.clone(),
                    members,
                }
            })
            .collect();
        let arma_eligibility = match data.grid() {
            None => Ok(()),
            Some(g) if check_special_case(g).eligible => Ok(()),
            Some(_) => Err("measurement grid is not equally spaced".to_string()),
        };
        Self {
            data,
            criterion,
            groups,
            arma_eligibility,
        }
    }

    pub fn criterion(&self) -> Criterion {
        self.criterion
    }

    pub fn data(&self) -> &RepeatedMeasuresData {
        self.data
    }

    fn correlation(&self, params: &CorrParams, times: &[f64]) -> DMatrix<f64> {
        match *params {
            CorrParams::Lear { rho_l, delta } => {
                if times.len() < 2 {
                    return DMatrix::identity(times.len(), times.len());
                }
                let g = self.data.grid().expect("subjects with pairs imply a grid");
                LearKernel::new(rho_l, delta, g.d_min(), g.d_max()).matrix(times)
            }
            CorrParams::Arma11 { tau, rho_a } => arma11_correlation_matrix(tau, rho_a, times.len()),
        }
    }

    pub fn loglik(&self, params: &CorrParams) -> Result<f64> {
        Ok(self.evaluate(params)?.loglik)
    }

    pub fn evaluate(&self, params: &CorrParams) -> Result<ProfileEvaluation> {
        params.check()?;
        if let (CorrParams::Arma11 { .. }, Err(why)) = (params, &self.arma_eligibility) {
            return Err(LearError::NotSpecialCase(why.clone()));
        }
        let q = self.data.q();
        let n = self.data.n_obs();

        let factors = self
            .groups
            .par_iter()
            .map(|g| {
                let chol = cholesky(&self.correlation(params, &g.times))?;
                let logdet = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
                Ok((chol, logdet))
            })
            .collect::<Result<Vec<_>>>()?;

        let items: Vec<(usize, usize)> = self
            .groups
            .iter()
            .enumerate()
            .flat_map(|(gi, g)| g.members.iter().map(move |&m| (gi, m)))
            .collect();
        let whitened: Vec<(DMatrix<f64>, DVector<f64>)> = items
            .par_iter()
            .map(|&(gi, m)| {
                let l = factors[gi].0.l_dirty();
                let s = &self.data.subjects()[m];
                let xt = l.solve_lower_triangular(&s.x).expect("nonzero pivots");
                let yt = l.solve_lower_triangular(&s.y).expect("nonzero pivots");
                (xt, yt)
            })
            .collect();

        let mut logdet_corr = 0.0;
        for (g, (_, ld)) in self.groups.iter().zip(&factors) {
            logdet_corr += ld * g.members.len() as f64;
        }
        let mut info = DMatrix::<f64>::zeros(q, q);
        let mut score = DVector::<f64>::zeros(q);
        let mut yty = 0.0;
        for (xt, yt) in &whitened {
            info += xt.tr_mul(xt);
            score += xt.tr_mul(yt);
            yty += yt.norm_squared();
        }
        let info_chol = nalgebra::Cholesky::new(info).ok_or(LearError::RankDeficient)?;
        let beta_hat = info_chol.solve(&score);
        let logdet_info = 2.0 * info_chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();

        let mut quad_form = 0.0;
        for (xt, yt) in &whitened {
            quad_form += (yt - xt * &beta_hat).norm_squared();
        }

        let df = match self.criterion {
            Criterion::Ml => n,
            Criterion::Reml => n.saturating_sub(q),
        };
        if df == 0 || !quad_form.is_finite() || quad_form <= 1e-24 * yty.max(f64::MIN_POSITIVE) {
            return Err(LearError::SingularFit);
        }
        let sigma2_hat = quad_form / df as f64;
        let core = df as f64 * ((2.0 * PI).ln() + sigma2_hat.ln() + 1.0) + logdet_corr;
        let loglik = match self.criterion {
            Criterion::Ml => -0.5 * core,
            Criterion::Reml => -0.5 * (core + logdet_info),
        };
        Ok(ProfileEvaluation {
            loglik,
            sigma2_hat,
            beta_hat,
            quad_form,
            logdet_corr,
            logdet_info,
            df,
        })
    }
}

/// One-shot profile log-likelihood at `params`.
pub fn profile_loglik(data: &RepeatedMeasuresData, params: &CorrParams, criterion: Criterion) -> Result<f64> {
    ProfileLikelihood::new(data, criterion).loglik(params)
}
