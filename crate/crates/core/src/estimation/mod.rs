//! Profile-likelihood fitting of the correlation parameters under either
//! parameterization.

pub mod compare;
pub mod fit;
pub mod likelihood;
pub mod nelder_mead;

pub use compare::{compare_parameterizations, ComparisonReport};
pub use fit::{fit, BoundaryFlag, Estimates, FitOptions, FitResult, Parameterization};
pub use likelihood::{profile_loglik, CorrParams, Criterion, ProfileEvaluation, ProfileLikelihood};
