use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use lear::reparam::lear_to_arma;
use lear::{FitOptions, MeasurementGrid};
use lear_ffi::*;

const SPEC: &str = r#"{"n_subjects":80,"times":[1,2,3,4,5],"beta":[1.0,0.5],"design":"intercept_time",
"covariance":{"lear":{"sigma2":2.0,"rho_l":0.6,"delta":3.0}},"seed":7}"#;

fn last_error() -> String {
    unsafe { CStr::from_ptr(lear_last_error_message()) }.to_string_lossy().into_owned()
}

fn grid(subjects: &[&[f64]]) -> *mut LearGrid {
    let flat: Vec<f64> = subjects.iter().flat_map(|s| s.iter().copied()).collect();
    let lengths: Vec<usize> = subjects.iter().map(|s| s.len()).collect();
    let mut g = ptr::null_mut();
    let st = unsafe { lear_grid_new(flat.as_ptr(), lengths.as_ptr(), lengths.len(), &mut g) };
    assert_eq!(st, LearStatus::Ok, "{}", last_error());
    g
}

fn simulated() -> *mut LearData {
    let spec = CString::new(SPEC).unwrap();
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { lear_data_simulate(spec.as_ptr(), &mut d) }, LearStatus::Ok, "{}", last_error());
    d
}

#[test]
fn covariance_matches_the_library() {
    let times: [&[f64]; 2] = [&[0.0, 1.0, 3.0], &[0.0, 2.0, 3.0, 7.0]];
    let g = grid(&times);
    let params = LearModelParams { sigma2: 1.5, rho_l: 0.4, delta: 2.0 };
    let lib = MeasurementGrid::new(times.iter().map(|t| t.to_vec()).collect()).unwrap();
    let want = lear::lear_covariance(&params.into(), &lib, 1).unwrap();
    let mut out = [0.0; 16];
    unsafe {
        assert_eq!(lear_grid_n_subjects(g), 2);
        assert_eq!(lear_grid_subject_len(g, 1), 4);
        assert_eq!(lear_covariance(g, params, 1, out.as_mut_ptr(), out.len()), LearStatus::Ok);
        let (mut lo, mut hi) = (0.0, 0.0);
        assert_eq!(lear_grid_extremes(g, &mut lo, &mut hi), LearStatus::Ok);
        assert_eq!((lo, hi), (1.0, 7.0));
        lear_grid_free(g);
    }
    for j in 0..4 {
        for k in 0..4 {
            assert_eq!(out[j * 4 + k], want[(j, k)]);
        }
    }
}

#[test]
fn errors_become_status_codes() {
    let g = grid(&[&[1.0, 2.0, 3.0]]);
    let ok = LearModelParams { sigma2: 1.0, rho_l: 0.5, delta: 1.0 };
    let mut small = [0.0; 4];
    unsafe {
        assert_eq!(lear_covariance(g, ok, 0, small.as_mut_ptr(), small.len()), LearStatus::BufferTooSmall);
        assert!(last_error().contains("need 9"));
        let mut big = [0.0; 9];
        assert_eq!(lear_covariance(g, ok, 5, big.as_mut_ptr(), 9), LearStatus::SubjectOutOfRange);
        let bad = LearModelParams { rho_l: 1.0, ..ok };
        assert_eq!(lear_covariance(g, bad, 0, big.as_mut_ptr(), 9), LearStatus::InvalidParams);
        assert_eq!(lear_covariance(ptr::null(), ok, 0, big.as_mut_ptr(), 9), LearStatus::NullPointer);
        let mut flags = 0;
        assert_eq!(lear_validate_params(LearModelParams { sigma2: -1.0, rho_l: 1.2, delta: -1.0 }, &mut flags), LearStatus::Ok);
        assert_eq!(
            flags,
            LEAR_VIOLATION_SIGMA2_NOT_POSITIVE | LEAR_VIOLATION_RHO_NOT_BELOW_ONE | LEAR_VIOLATION_DELTA_NEGATIVE
        );
        lear_grid_free(g);

        let irregular = grid(&[&[1.0, 2.0, 4.0]]);
        let mut arma = LearArmaParams { sigma2: 0.0, tau: 0.0, rho_a: 0.0 };
        assert_eq!(lear_to_arma11(irregular, ok, &mut arma, ptr::null_mut()), LearStatus::NotSpecialCase);
        lear_grid_free(irregular);

        let mut h = ptr::null_mut();
        let dup = [1.0, 1.0];
        assert_eq!(lear_grid_new(dup.as_ptr(), [2usize].as_ptr(), 1, &mut h), LearStatus::InvalidGrid);
        assert!(h.is_null());

        let path = CString::new("/nonexistent/data.csv").unwrap();
        let mut d = ptr::null_mut();
        assert_eq!(lear_data_from_csv(path.as_ptr(), &mut d), LearStatus::IoError);
        let junk = CString::new("{").unwrap();
        assert_eq!(lear_data_simulate(junk.as_ptr(), &mut d), LearStatus::ParseError);
        assert!(d.is_null());
        lear_grid_free(ptr::null_mut());
        lear_data_free(ptr::null_mut());
        lear_string_free(ptr::null_mut());
    }
}

#[test]
fn reparameterization_round_trip() {
    let times: Vec<f64> = (0..6).map(|k| 2.0 * k as f64).collect();
    let g = grid(&[&times]);
    let p = LearModelParams { sigma2: 2.0, rho_l: 0.7, delta: 3.0 };
    let want = lear_to_arma(&p.into(), &MeasurementGrid::new(vec![times]).unwrap()).unwrap();
    unsafe {
        let mut sc = LearSpecialCase { equally_spaced: false, integer_distances: false, dmin_is_one: false, eligible: false, spacing: 0.0 };
        assert_eq!(lear_check_special_case(g, &mut sc), LearStatus::Ok);
        assert!(sc.eligible && sc.equally_spaced);
        assert_eq!(sc.spacing, 2.0);
        let mut arma = LearArmaParams { sigma2: 0.0, tau: 0.0, rho_a: 0.0 };
        let mut identifiable = false;
        assert_eq!(lear_to_arma11(g, p, &mut arma, &mut identifiable), LearStatus::Ok);
        assert_eq!(LearArmaParams::from(want.params), arma);
        assert!(identifiable);
        let mut back = LearModelParams { sigma2: 0.0, rho_l: 0.0, delta: 0.0 };
        assert_eq!(lear_from_arma11(g, arma, &mut back), LearStatus::Ok);
        assert!((back.rho_l - p.rho_l).abs() < 1e-12 && (back.delta - p.delta).abs() < 1e-10, "{back:?}");

        let mut m = [0.0; 36];
        assert_eq!(lear_arma11_covariance(arma, 6, m.as_mut_ptr(), 36), LearStatus::Ok);
        let mut l = [0.0; 36];
        assert_eq!(lear_covariance(g, p, 0, l.as_mut_ptr(), 36), LearStatus::Ok);
        for (a, b) in m.iter().zip(&l) {
            assert!((a - b).abs() < 1e-12);
        }
        lear_grid_free(g);
    }
}

#[test]
fn fit_and_compare_match_the_library() {
    let d = simulated();
    let spec: lear::SimSpec = serde_json::from_str(SPEC).unwrap();
    let data = lear::simulate(&spec).unwrap();
    let opts = lear_fit_options_default();
    assert_eq!(FitOptions::from(opts), FitOptions::default());
    unsafe {
        assert_eq!(lear_data_n_subjects(d), 80);
        assert_eq!(lear_data_n_obs(d), 400);
        let mut s = std::mem::zeroed::<LearFitSummary>();
        assert_eq!(lear_fit(d, LearParameterization::Lear, LearCriterion::Reml, ptr::null(), &mut s), LearStatus::Ok);
        let want = lear::fit(&data, lear::Parameterization::Lear, lear::Criterion::Reml, &FitOptions::default()).unwrap();
        assert_eq!(s.max_loglik, want.max_loglik);
        assert_eq!(s.converged, want.converged);
        let mut ll = 0.0;
        assert_eq!(
            lear_profile_loglik(d, LearParameterization::Lear, s.first, s.second, LearCriterion::Reml, &mut ll),
            LearStatus::Ok
        );
        assert_eq!(ll, s.max_loglik);

        let mut a = std::mem::zeroed::<LearFitSummary>();
        assert_eq!(lear_fit(d, LearParameterization::Arma11, LearCriterion::Reml, &opts, &mut a), LearStatus::Ok);
        assert_eq!(a.parameterization, LearParameterization::Arma11);
        assert!((a.max_loglik - s.max_loglik).abs() < 1e-4);

        let mut json = ptr::null_mut();
        assert_eq!(lear_compare_json(d, LearCriterion::Reml, &opts, &mut json), LearStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        lear_string_free(json);
        let report = lear::compare_parameterizations(&data, lear::Criterion::Reml, &FitOptions::default()).unwrap();
        assert_eq!(text, lear::io::to_json(&report).unwrap());
        lear_data_free(d);
    }
}

#[test]
fn in_memory_data_fits() {
    let times: Vec<f64> = (0..30).flat_map(|_| [1.0, 2.0, 3.0, 4.0]).collect();
    let mut s = lear::sim::NormalStream::new(3);
    let y: Vec<f64> = times.iter().map(|_| s.next_normal()).collect();
    let lengths = [4usize; 30];
    let mut d = ptr::null_mut();
    unsafe {
        let st = lear_data_new(times.as_ptr(), y.as_ptr(), lengths.as_ptr(), 30, LearDesign::Intercept, &mut d);
        assert_eq!(st, LearStatus::Ok, "{}", last_error());
        let mut out = std::mem::zeroed::<LearFitSummary>();
        assert_eq!(lear_fit(d, LearParameterization::Lear, LearCriterion::Ml, ptr::null(), &mut out), LearStatus::Ok);
        assert!(out.max_loglik.is_finite());
        assert!((0.0..1.0).contains(&out.first) && out.second >= 0.0);
        lear_data_free(d);
    }
}

/// Compiles a small C program against the generated header and the static library.
#[test]
fn c_program_links_against_the_static_library() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = crate_dir.join("include/lear_ffi.h");
    assert!(header.exists());
    let target_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = target_dir.join("liblear_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let tmp = std::env::temp_dir().join(format!("lear_ffi_smoke_{}", std::process::id()));
    std::fs::create_dir_all(&tmp).unwrap();
    let src = tmp.join("smoke.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include <math.h>
#include "lear_ffi.h"

int main(void) {
    double times[] = {1, 2, 3, 4};
    size_t lengths[] = {4};
    LearGrid *g = NULL;
    if (lear_grid_new(times, lengths, 1, &g) != LEAR_STATUS_OK) return 1;
    LearModelParams p = {1.0, 0.5, 2.0};
    double m[16];
    if (lear_covariance(g, p, 0, m, 16) != LEAR_STATUS_OK) return 2;
    if (fabs(m[1] - 0.5) > 1e-15 || fabs(m[3] - 0.125) > 1e-15) return 3;
    if (lear_covariance(g, p, 0, m, 3) != LEAR_STATUS_BUFFER_TOO_SMALL) return 4;
    LearArmaParams a;
    bool ident = false;
    if (lear_to_arma11(g, p, &a, &ident) != LEAR_STATUS_OK || !ident) return 5;
    lear_grid_free(g);
    printf("%.6f %.6f %s\n", a.tau, a.rho_a, lear_last_error_message());
    return 0;
}
"#,
    )
    .unwrap();
    let exe = tmp.join("smoke");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("0.500000 0.500000 need 16 doubles"), "{text}");
    std::fs::remove_dir_all(&tmp).ok();
}
