//! The linear exponent autoregressive (LEAR) correlation model for repeated
//! measures.
//!
//! - [`correlation`]: LEAR and ARMA(1,1) correlation/covariance matrices.
//! - [`reparam`]: exact LEAR <-> ARMA(1,1) maps on equally spaced grids.
//! - [`estimation`]: profile ML/REML fitting in either parameterization and
//!   a side-by-side comparison of the two.
//! - [`sim`]: seeded Gaussian data generation.
//! - [`io`]: long-format CSV and JSON reports; [`cli`] wires it all into the
//!   `lear` binary.

pub mod cli;
pub mod correlation;
pub mod data;
pub mod error;
pub mod estimation;
pub mod grid;
pub mod io;
pub mod reparam;
pub mod sim;

pub use correlation::{
    arma11_covariance, lear_correlation, lear_covariance, validate_params, Arma11Params, CorrelationMatrix,
    LearParams,
};
pub use data::{DesignRule, RepeatedMeasuresData, Subject};
pub use error::{LearError, Result, Violation};
pub use estimation::{
    compare_parameterizations, fit, profile_loglik, ComparisonReport, CorrParams, Criterion, FitOptions, FitResult,
    Parameterization,
};
pub use grid::MeasurementGrid;
pub use reparam::{arma_to_lear, check_special_case, lear_to_arma, normalize_grid, SpecialCaseReport};
pub use sim::{simulate, SimSpec};
