//! Seeded Gaussian simulation of repeated-measures data.
//!
//! Stream definition, fixed so that other implementations can reproduce
//! datasets exactly:
//!
//! 1. Generator: xoshiro256** whose 256-bit state is filled by four
//!    successive SplitMix64 outputs starting from the 64-bit seed.
//! 2. Uniform: `u = (next_u64() >> 11) * 2^-53`, in `[0, 1)`.
//! 3. Normals: Box-Muller on consecutive uniforms `(u1, u2)`:
//!    `r = sqrt(-2 ln(1 - u1))`, yielding `r cos(2 pi u2)` then
//!    `r sin(2 pi u2)`.
//! 4. Subjects are drawn in order; within a subject `z` is filled from
//!    index 0 upward, and `y_i = X_i beta + L_i z` with `L_i` the lower
//!    Cholesky factor of the subject's covariance. A pending sine variate
//!    carries over to the next subject.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;
use serde::{Deserialize, Serialize};

use crate::correlation::{arma11_covariance, cholesky, lear_covariance, Arma11Params, LearParams};
use crate::data::{DesignRule, RepeatedMeasuresData, Subject};
use crate::error::{LearError, Result};
use crate::grid::MeasurementGrid;

/// Standard normal stream over xoshiro256** with Box-Muller.
#[derive(Debug, Clone)]
pub struct NormalStream {
    rng: Xoshiro256StarStar,
    pending: Option<f64>,
}

impl NormalStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: Xoshiro256StarStar::seed_from_u64(seed),
            pending: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    pub fn next_uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.pending.take() {
            return z;
        }
        let u1 = self.next_uniform();
        let u2 = self.next_uniform();
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let theta = 2.0 * PI * u2;
        self.pending = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// Measurement times: one template shared by every subject, or one vector per subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeLayout {
    Shared(Vec<f64>),
    PerSubject(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceSpec {
    Lear(LearParams),
    Arma11(Arma11Params),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub n_subjects: usize,
    pub times: TimeLayout,
    pub beta: Vec<f64>,
    pub design: DesignRule,
    pub covariance: CovarianceSpec,
    pub seed: u64,
}

impl SimSpec {
    fn subject_times(&self) -> Result<Vec<Vec<f64>>> {
        match &self.times {
            TimeLayout::Shared(t) => Ok(vec![t.clone(); self.n_subjects]),
            TimeLayout::PerSubject(v) if v.len() == self.n_subjects => Ok(v.clone()),
            TimeLayout::PerSubject(v) => Err(LearError::InvalidData(format!(
                "{} time vectors for {} subjects",
                v.len(),
                self.n_subjects
            ))),
        }
    }
}

/// Draws one dataset; identical specs give bit-identical data.
pub fn simulate(spec: &SimSpec) -> Result<RepeatedMeasuresData> {
    if spec.n_subjects == 0 {
        return Err(LearError::InvalidData("n_subjects must be >= 1".into()));
    }
    let times = spec.subject_times()?;
    let grid = MeasurementGrid::new(times.clone());
    let width = spec.n_subjects.to_string().len();
    let beta = DVector::from_column_slice(&spec.beta);
    let mut stream = NormalStream::new(spec.seed);

    let mut subjects = Vec::with_capacity(spec.n_subjects);
    let mut factor_cache: Vec<(Vec<f64>, nalgebra::DMatrix<f64>)> = Vec::new();
    for (i, t) in times.into_iter().enumerate() {
        let x = spec.design.design(i, &t)?;
        if x.ncols() != beta.len() {
            return Err(LearError::InvalidData(format!(
                "beta has {} entries but the design has {} columns",
                beta.len(),
                x.ncols()
            )));
        }
        let l = match factor_cache.iter().find(|(ct, _)| *ct == t) {
            Some((_, l)) => l.clone(),
            None => {
                let cov = match &spec.covariance {
                    CovarianceSpec::Lear(p) => {
                        p.check()?;
                        if t.len() < 2 {
                            nalgebra::DMatrix::from_element(1, 1, p.sigma2)
                        } else {
                            let g = grid.as_ref().map_err(|_| LearError::DegenerateGrid)?;
                            lear_covariance(p, g, i)?
                        }
                    }
                    CovarianceSpec::Arma11(p) => arma11_covariance(p, t.len())?,
                };
                let l = cholesky(&cov)?.l();
                factor_cache.push((t.clone(), l.clone()));
                l
            }
        };
        let z = DVector::from_fn(t.len(), |_, _| stream.next_normal());
        let y = &x * &beta + l * z;
        subjects.push(Subject {
            id: format!("s{:0width$}", i + 1),
            times: t,
            y,
            x,
        });
    }
    RepeatedMeasuresData::new(subjects)
}
