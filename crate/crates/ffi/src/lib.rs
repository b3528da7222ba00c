//! C ABI for the `lear` crate.
//!
//! Conventions:
//! - Every fallible function returns a [`LearStatus`]; `LEAR_STATUS_OK` is 0.
//!   On failure, [`lear_last_error_message`] describes the most recent error
//!   on the calling thread.
//! - Grids and data sets are opaque handles created by `*_new` / `*_from_*`
//!   functions and released with the matching `*_free`.
//! - Matrices are written row-major into caller buffers of `p * p` doubles.
//! - Panics never cross the boundary; they surface as `LEAR_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lear::estimation::{BoundaryFlag, Estimates, FitOptions, FitResult};
use lear::io::{read_long_csv_path, to_json, CsvSchema};
use lear::reparam::{check_special_case, lear_to_arma, arma_to_lear};
use lear::sim::SimSpec;
use lear::{
    Arma11Params, CorrParams, Criterion, DesignRule, LearError, LearParams, MeasurementGrid, Parameterization,
    RepeatedMeasuresData, Violation,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearStatus {
    Ok = 0,
    NullPointer = 1,
    BufferTooSmall = 2,
    InvalidUtf8 = 3,
    InvalidGrid = 10,
    DegenerateGrid = 11,
    InvalidParams = 12,
    InvalidSize = 13,
    SubjectOutOfRange = 14,
    InvalidData = 15,
    DegenerateRange = 16,
    NotPositiveDefinite = 20,
    RankDeficient = 21,
    SingularFit = 22,
    FitFailed = 23,
    NotSpecialCase = 30,
    Unidentifiable = 31,
    OutsideLearImage = 32,
    DuplicateMeasurement = 40,
    ParseError = 41,
    ConfigError = 42,
    IoError = 43,
    Panic = 99,
}

impl From<&LearError> for LearStatus {
    fn from(e: &LearError) -> Self {
        match e {
            LearError::InvalidGrid(_) => Self::InvalidGrid,
            LearError::DegenerateGrid => Self::DegenerateGrid,
            LearError::InvalidParams(_) => Self::InvalidParams,
            LearError::InvalidSize(_) => Self::InvalidSize,
            LearError::SubjectOutOfRange { .. } => Self::SubjectOutOfRange,
            LearError::NotPositiveDefinite => Self::NotPositiveDefinite,
            LearError::NotSpecialCase(_) => Self::NotSpecialCase,
            LearError::DegenerateRange => Self::DegenerateRange,
            LearError::Unidentifiable(_) => Self::Unidentifiable,
            LearError::OutsideLearImage(_) => Self::OutsideLearImage,
            LearError::RankDeficient => Self::RankDeficient,
            LearError::SingularFit => Self::SingularFit,
            LearError::FitFailed(_) => Self::FitFailed,
            LearError::InvalidData(_) => Self::InvalidData,
            LearError::DuplicateMeasurement { .. } => Self::DuplicateMeasurement,
            LearError::Parse { .. } => Self::ParseError,
            LearError::Config(_) => Self::ConfigError,
            LearError::Io(_) => Self::IoError,
        }
    }
}

/// Violation bits reported by [`lear_validate_params`].
pub const LEAR_VIOLATION_SIGMA2_NOT_POSITIVE: u32 = 1;
pub const LEAR_VIOLATION_RHO_NEGATIVE: u32 = 1 << 1;
pub const LEAR_VIOLATION_RHO_NOT_BELOW_ONE: u32 = 1 << 2;
pub const LEAR_VIOLATION_DELTA_NEGATIVE: u32 = 1 << 3;
pub const LEAR_VIOLATION_NON_FINITE: u32 = 1 << 4;

/// Boundary bits in [`LearFitSummary::boundary_flags`]. For ARMA(1,1) fits
/// the `RHO` bits refer to tau and the `DELTA` bits to rho_A.
pub const LEAR_BOUNDARY_RHO_AT_LOWER: u32 = 1;
pub const LEAR_BOUNDARY_RHO_AT_UPPER_CAP: u32 = 1 << 1;
pub const LEAR_BOUNDARY_DELTA_AT_LOWER: u32 = 1 << 2;
pub const LEAR_BOUNDARY_DELTA_AT_UPPER_CAP: u32 = 1 << 3;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearModelParams {
    pub sigma2: f64,
    pub rho_l: f64,
    pub delta: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearArmaParams {
    pub sigma2: f64,
    pub tau: f64,
    pub rho_a: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearSpecialCase {
    pub equally_spaced: bool,
    pub integer_distances: bool,
    pub dmin_is_one: bool,
    pub eligible: bool,
    /// Common spacing, or NaN when the grid is not equally spaced.
    pub spacing: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearParameterization {
    Lear = 0,
    Arma11 = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearCriterion {
    Ml = 0,
    Reml = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearDesign {
    Intercept = 0,
    InterceptTime = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearFitOptions {
    pub grid_points: usize,
    pub rho_cap: f64,
    pub rho_a_cap: f64,
    /// Upper bound for delta as a multiple of d_max - d_min.
    pub delta_cap: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub widen_arma: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearFitSummary {
    pub parameterization: LearParameterization,
    pub criterion: LearCriterion,
    pub sigma2: f64,
    /// rho_L or tau.
    pub first: f64,
    /// delta or rho_A.
    pub second: f64,
    pub max_loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
    pub boundary_flags: u32,
    pub in_lear_image: bool,
}

/// Opaque measurement grid.
pub struct LearGrid(MeasurementGrid);

/// Opaque repeated-measures data set.
pub struct LearData(RepeatedMeasuresData);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: LearStatus, msg: &str) -> LearStatus {
    set_last_error(msg);
    status
}

/// Runs `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), LearStatus>) -> LearStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LearStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(LearStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: lear::Result<T>) -> Result<T, LearStatus> {
    r.map_err(|e| fail(LearStatus::from(&e), &e.to_string()))
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), LearStatus> {
    if p.is_null() {
        Err(fail(LearStatus::NullPointer, &format!("{what} is NULL")))
    } else {
        Ok(())
    }
}

/// # Safety
/// `p` must be NULL or point to a NUL-terminated string.
unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, LearStatus> {
    non_null(p, what)?;
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(LearStatus::InvalidUtf8, &format!("{what} is not UTF-8")))
}

fn write_matrix(m: &nalgebra::DMatrix<f64>, out: *mut f64, capacity: usize) -> Result<(), LearStatus> {
    non_null(out, "out")?;
    let n = m.nrows() * m.ncols();
    if capacity < n {
        return Err(fail(LearStatus::BufferTooSmall, &format!("need {n} doubles, buffer holds {capacity}")));
    }
    // SAFETY: out is non-null with room for n doubles, checked above
    let dst = unsafe { std::slice::from_raw_parts_mut(out, n) };
    for (i, row) in m.row_iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            dst[i * m.ncols() + j] = *v;
        }
    }
    Ok(())
}

fn criterion(c: LearCriterion) -> Criterion {
    match c {
        LearCriterion::Ml => Criterion::Ml,
        LearCriterion::Reml => Criterion::Reml,
    }
}

fn parameterization(p: LearParameterization) -> Parameterization {
    match p {
        LearParameterization::Lear => Parameterization::Lear,
        LearParameterization::Arma11 => Parameterization::Arma11,
    }
}

impl From<LearModelParams> for LearParams {
    fn from(p: LearModelParams) -> Self {
        LearParams { sigma2: p.sigma2, rho_l: p.rho_l, delta: p.delta }
    }
}

impl From<LearParams> for LearModelParams {
    fn from(p: LearParams) -> Self {
        Self { sigma2: p.sigma2, rho_l: p.rho_l, delta: p.delta }
    }
}

impl From<LearArmaParams> for Arma11Params {
    fn from(p: LearArmaParams) -> Self {
        Arma11Params { sigma2: p.sigma2, tau: p.tau, rho_a: p.rho_a }
    }
}

impl From<Arma11Params> for LearArmaParams {
    fn from(p: Arma11Params) -> Self {
        Self { sigma2: p.sigma2, tau: p.tau, rho_a: p.rho_a }
    }
}

impl From<LearFitOptions> for FitOptions {
    fn from(o: LearFitOptions) -> Self {
        FitOptions {
            grid_points: o.grid_points,
            rho_cap: o.rho_cap,
            rho_a_cap: o.rho_a_cap,
            delta_cap: o.delta_cap,
            max_iterations: o.max_iterations,
            tolerance: o.tolerance,
            widen_arma: o.widen_arma,
        }
    }
}

/// # Safety
/// `options` must be NULL or point to a valid [`LearFitOptions`].
unsafe fn fit_options(options: *const LearFitOptions) -> FitOptions {
    if options.is_null() {
        FitOptions::default()
    } else {
        (*options).into()
    }
}

fn summary(r: &FitResult) -> LearFitSummary {
    let (sigma2, first, second) = match r.estimates {
        Estimates::Lear(p) => (p.sigma2, p.rho_l, p.delta),
        Estimates::Arma11(p) => (p.sigma2, p.tau, p.rho_a),
    };
    let boundary_flags = r
        .boundary_flags
        .iter()
        .map(|f| match f {
            BoundaryFlag::RhoAtLower => LEAR_BOUNDARY_RHO_AT_LOWER,
            BoundaryFlag::RhoAtUpperCap => LEAR_BOUNDARY_RHO_AT_UPPER_CAP,
            BoundaryFlag::DeltaAtLower => LEAR_BOUNDARY_DELTA_AT_LOWER,
            BoundaryFlag::DeltaAtUpperCap => LEAR_BOUNDARY_DELTA_AT_UPPER_CAP,
        })
        .fold(0, |a, b| a | b);
    LearFitSummary {
        parameterization: match r.parameterization {
            Parameterization::Lear => LearParameterization::Lear,
            Parameterization::Arma11 => LearParameterization::Arma11,
        },
        criterion: match r.criterion {
            Criterion::Ml => LearCriterion::Ml,
            Criterion::Reml => LearCriterion::Reml,
        },
        sigma2,
        first,
        second,
        max_loglik: r.max_loglik,
        converged: r.converged,
        iterations: r.iterations,
        evaluations: r.evaluations,
        boundary_flags,
        in_lear_image: r.in_lear_image,
    }
}

/// Message of the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn lear_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Built-in fit options.
#[no_mangle]
pub extern "C" fn lear_fit_options_default() -> LearFitOptions {
    let d = FitOptions::default();
    LearFitOptions {
        grid_points: d.grid_points,
        rho_cap: d.rho_cap,
        rho_a_cap: d.rho_a_cap,
        delta_cap: d.delta_cap,
        max_iterations: d.max_iterations,
        tolerance: d.tolerance,
        widen_arma: d.widen_arma,
    }
}

/// Builds a grid from `n_subjects` time vectors stored back to back in
/// `times`; `lengths[i]` is the number of times of subject `i`.
///
/// # Safety
/// `lengths` must point to `n_subjects` values, `times` to their sum, and
/// `out` to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn lear_grid_new(
    times: *const f64,
    lengths: *const usize,
    n_subjects: usize,
    out: *mut *mut LearGrid,
) -> LearStatus {
    guard(|| {
        non_null(out, "out")?;
        non_null(lengths, "lengths")?;
        let lengths = std::slice::from_raw_parts(lengths, n_subjects);
        let total: usize = lengths.iter().sum();
        if total > 0 {
            non_null(times, "times")?;
        }
        let flat = if total == 0 { &[][..] } else { std::slice::from_raw_parts(times, total) };
        let mut subjects = Vec::with_capacity(n_subjects);
        let mut at = 0;
        for &len in lengths {
            subjects.push(flat[at..at + len].to_vec());
            at += len;
        }
        let grid = lift(MeasurementGrid::new(subjects))?;
        *out = Box::into_raw(Box::new(LearGrid(grid)));
        Ok(())
    })
}

/// Replaces the data-derived `d_min`/`d_max` with fixed values.
///
/// # Safety
/// `grid` must be a live handle from [`lear_grid_new`].
#[no_mangle]
pub unsafe extern "C" fn lear_grid_set_extremes(grid: *mut LearGrid, d_min: f64, d_max: f64) -> LearStatus {
    guard(|| {
        non_null(grid, "grid")?;
        let g = &mut (*grid).0;
        *g = lift(g.clone().with_extremes(d_min, d_max))?;
        Ok(())
    })
}

/// # Safety
/// `grid` must be NULL or a handle from [`lear_grid_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lear_grid_free(grid: *mut LearGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// # Safety
/// `grid` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lear_grid_n_subjects(grid: *const LearGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.n_subjects())
}

/// Number of times of one subject; 0 for an invalid index.
///
/// # Safety
/// `grid` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lear_grid_subject_len(grid: *const LearGrid, subject: usize) -> usize {
    grid.as_ref().and_then(|g| g.0.times(subject).ok()).map_or(0, <[f64]>::len)
}

/// # Safety
/// `grid` must be a live handle; `d_min` and `d_max` writable.
#[no_mangle]
pub unsafe extern "C" fn lear_grid_extremes(grid: *const LearGrid, d_min: *mut f64, d_max: *mut f64) -> LearStatus {
    guard(|| {
        non_null(grid, "grid")?;
        non_null(d_min, "d_min")?;
        non_null(d_max, "d_max")?;
        *d_min = (*grid).0.d_min();
        *d_max = (*grid).0.d_max();
        Ok(())
    })
}

/// Writes a bit set of `LEAR_VIOLATION_*` values; 0 means valid.
///
/// # Safety
/// `out_flags` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lear_validate_params(params: LearModelParams, out_flags: *mut u32) -> LearStatus {
    guard(|| {
        non_null(out_flags, "out_flags")?;
        *out_flags = lear::validate_params(&params.into())
            .iter()
            .map(|v| match v {
                Violation::Sigma2NotPositive => LEAR_VIOLATION_SIGMA2_NOT_POSITIVE,
                Violation::RhoNegative => LEAR_VIOLATION_RHO_NEGATIVE,
                Violation::RhoNotBelowOne => LEAR_VIOLATION_RHO_NOT_BELOW_ONE,
                Violation::DeltaNegative => LEAR_VIOLATION_DELTA_NEGATIVE,
                Violation::NonFinite => LEAR_VIOLATION_NON_FINITE,
                Violation::ArmaOutOfRange => 0,
            })
            .fold(0, |a, b| a | b);
        Ok(())
    })
}

/// LEAR covariance of one subject, row-major into `out` (`capacity` doubles).
///
/// # Safety
/// `grid` must be a live handle and `out` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn lear_covariance(
    grid: *const LearGrid,
    params: LearModelParams,
    subject: usize,
    out: *mut f64,
    capacity: usize,
) -> LearStatus {
    guard(|| {
        non_null(grid, "grid")?;
        let m = lift(lear::lear_covariance(&params.into(), &(*grid).0, subject))?;
        write_matrix(&m, out, capacity)
    })
}

/// ARMA(1,1) covariance of dimension `p`, row-major into `out`.
///
/// # Safety
/// `out` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn lear_arma11_covariance(
    params: LearArmaParams,
    p: usize,
    out: *mut f64,
    capacity: usize,
) -> LearStatus {
    guard(|| {
        let m = lift(lear::arma11_covariance(&params.into(), p))?;
        write_matrix(&m, out, capacity)
    })
}

/// # Safety
/// `grid` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lear_check_special_case(grid: *const LearGrid, out: *mut LearSpecialCase) -> LearStatus {
    guard(|| {
        non_null(grid, "grid")?;
        non_null(out, "out")?;
        let r = check_special_case(&(*grid).0);
        *out = LearSpecialCase {
            equally_spaced: r.equally_spaced,
            integer_distances: r.integer_distances,
            dmin_is_one: r.dmin_is_one,
            eligible: r.eligible,
            spacing: r.spacing.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// Maps LEAR parameters to ARMA(1,1) on an equally spaced grid.
/// `out_identifiable` may be NULL; it receives false when rho_A is arbitrary.
///
/// # Safety
/// `grid` must be a live handle, `out` writable, `out_identifiable` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn lear_to_arma11(
    grid: *const LearGrid,
    params: LearModelParams,
    out: *mut LearArmaParams,
    out_identifiable: *mut bool,
) -> LearStatus {
    guard(|| {
        non_null(grid, "grid")?;
        non_null(out, "out")?;
        let m = lift(lear_to_arma(&params.into(), &(*grid).0))?;
        *out = m.params.into();
        if !out_identifiable.is_null() {
            *out_identifiable = m.rho_a_identifiable;
        }
        Ok(())
    })
}

/// Maps ARMA(1,1) parameters back to LEAR on an equally spaced grid.
///
/// # Safety
/// `grid` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lear_from_arma11(
    grid: *const LearGrid,
    params: LearArmaParams,
    out: *mut LearModelParams,
) -> LearStatus {
    guard(|| {
        non_null(grid, "grid")?;
        non_null(out, "out")?;
        *out = lift(arma_to_lear(&params.into(), &(*grid).0))?.into();
        Ok(())
    })
}

/// Builds a data set from back-to-back per-subject times and responses.
///
/// # Safety
/// `lengths` must point to `n_subjects` values; `times` and `y` to their sum;
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lear_data_new(
    times: *const f64,
    y: *const f64,
    lengths: *const usize,
    n_subjects: usize,
    design: LearDesign,
    out: *mut *mut LearData,
) -> LearStatus {
    guard(|| {
        non_null(out, "out")?;
        non_null(lengths, "lengths")?;
        non_null(times, "times")?;
        non_null(y, "y")?;
        let lengths = std::slice::from_raw_parts(lengths, n_subjects);
        let total: usize = lengths.iter().sum();
        let (t, v) = (std::slice::from_raw_parts(times, total), std::slice::from_raw_parts(y, total));
        let mut at = 0;
        let (mut ts, mut ys) = (Vec::new(), Vec::new());
        for &len in lengths {
            ts.push(t[at..at + len].to_vec());
            ys.push(v[at..at + len].to_vec());
            at += len;
        }
        let ids = (1..=n_subjects).map(|i| format!("s{i}")).collect();
        let rule = match design {
            LearDesign::Intercept => DesignRule::Intercept,
            LearDesign::InterceptTime => DesignRule::InterceptTime,
        };
        let data = lift(RepeatedMeasuresData::from_rule(ids, ts, ys, &rule))?;
        *out = Box::into_raw(Box::new(LearData(data)));
        Ok(())
    })
}

/// Reads long-format CSV with columns `subject,time,y` and an intercept-only design.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lear_data_from_csv(path: *const c_char, out: *mut *mut LearData) -> LearStatus {
    guard(|| {
        non_null(out, "out")?;
        let path = read_str(path, "path")?;
        let data = lift(read_long_csv_path(std::path::Path::new(path), &CsvSchema::default()))?;
        *out = Box::into_raw(Box::new(LearData(data)));
        Ok(())
    })
}

/// Simulates a data set from a JSON simulation spec.
///
/// # Safety
/// `spec_json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lear_data_simulate(spec_json: *const c_char, out: *mut *mut LearData) -> LearStatus {
    guard(|| {
        non_null(out, "out")?;
        let text = read_str(spec_json, "spec_json")?;
        let spec: SimSpec = serde_json::from_str(text).map_err(|e| fail(LearStatus::ParseError, &e.to_string()))?;
        let data = lift(lear::simulate(&spec))?;
        *out = Box::into_raw(Box::new(LearData(data)));
        Ok(())
    })
}

/// # Safety
/// `data` must be NULL or a live handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lear_data_free(data: *mut LearData) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// # Safety
/// `data` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lear_data_n_subjects(data: *const LearData) -> usize {
    data.as_ref().map_or(0, |d| d.0.n_subjects())
}

/// # Safety
/// `data` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lear_data_n_obs(data: *const LearData) -> usize {
    data.as_ref().map_or(0, |d| d.0.n_obs())
}

/// Profile log-likelihood at (`first`, `second`): (rho_L, delta) or (tau, rho_A).
///
/// # Safety
/// `data` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lear_profile_loglik(
    data: *const LearData,
    kind: LearParameterization,
    first: f64,
    second: f64,
    crit: LearCriterion,
    out: *mut f64,
) -> LearStatus {
    guard(|| {
        non_null(data, "data")?;
        non_null(out, "out")?;
        let params = match kind {
            LearParameterization::Lear => CorrParams::Lear { rho_l: first, delta: second },
            LearParameterization::Arma11 => CorrParams::Arma11 { tau: first, rho_a: second },
        };
        *out = lift(lear::profile_loglik(&(*data).0, &params, criterion(crit)))?;
        Ok(())
    })
}

/// Fits one parameterization. `options` may be NULL for the defaults.
///
/// # Safety
/// `data` must be a live handle, `options` NULL or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lear_fit(
    data: *const LearData,
    kind: LearParameterization,
    crit: LearCriterion,
    options: *const LearFitOptions,
    out: *mut LearFitSummary,
) -> LearStatus {
    guard(|| {
        non_null(data, "data")?;
        non_null(out, "out")?;
        let r = lift(lear::fit(&(*data).0, parameterization(kind), criterion(crit), &fit_options(options)))?;
        *out = summary(&r);
        Ok(())
    })
}

/// Fits both parameterizations and returns the comparison report as a JSON
/// string owned by the caller (release with [`lear_string_free`]).
///
/// # Safety
/// `data` must be a live handle, `options` NULL or valid, `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn lear_compare_json(
    data: *const LearData,
    crit: LearCriterion,
    options: *const LearFitOptions,
    out_json: *mut *mut c_char,
) -> LearStatus {
    guard(|| {
        non_null(data, "data")?;
        non_null(out_json, "out_json")?;
        *out_json = ptr::null_mut();
        let report = lift(lear::compare_parameterizations(&(*data).0, criterion(crit), &fit_options(options)))?;
        let json = lift(to_json(&report))?;
        *out_json = CString::new(json).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lear_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
