use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use nldd_ffi::*;

fn problem(alpha: f64, gamma: f64) -> *mut NlddProblem {
    let mut p = ptr::null_mut();
    let s = unsafe { nldd_problem_new(alpha, NlddForcing::Sine, 10.0, 1.0, 0.0, 2.0, 100, gamma, &mut p) };
    assert_eq!(s, NlddStatus::Ok);
    assert!(!p.is_null());
    p
}

fn last_error() -> String {
    let e = nldd_last_error();
    assert!(!e.is_null());
    unsafe { CStr::from_ptr(e) }.to_string_lossy().into_owned()
}

#[test]
fn dtn_and_ntd_round_trip_through_the_abi() {
    let p = problem(1.0, 0.3);
    for index in [0, 1] {
        let mut flux = 0.0;
        let mut back = 0.0;
        unsafe {
            assert_eq!(nldd_dtn(p, index, 0.7, &mut flux), NlddStatus::Ok);
            assert_eq!(nldd_ntd(p, index, flux, &mut back), NlddStatus::Ok);
        }
        assert!((back - 0.7).abs() < 1e-10, "subdomain {index}: {back}");
    }
    unsafe { nldd_problem_free(p) };
}

#[test]
fn optimal_theta_matches_the_linear_ratio() {
    let mut p = ptr::null_mut();
    let s = unsafe { nldd_problem_new(0.0, NlddForcing::Zero, 0.0, 0.0, 1.0, 3.0, 100, 0.3, &mut p) };
    assert_eq!(s, NlddStatus::Ok);
    let mut q = NlddOptimalTheta::default();
    assert_eq!(unsafe { nldd_optimal_theta(p, &mut q) }, NlddStatus::Ok);
    assert!((q.delta - 0.7 / 0.3).abs() < 1e-6);
    assert!((q.theta - 0.3).abs() < 1e-6);
    assert!((q.lambda_exact - 1.6).abs() < 1e-12);
    unsafe { nldd_problem_free(p) };
}

#[test]
fn solves_return_histories() {
    let p = problem(1.0, 0.5);
    let mut exact = 0.0;
    unsafe { assert_eq!(nldd_exact_trace(p, &mut exact), NlddStatus::Ok) };
    for dnpen in [false, true] {
        let mut h = ptr::null_mut();
        let s = unsafe {
            if dnpen {
                nldd_dnpen_solve(p, 0.0, 0.5, 1e-10, 50, &mut h)
            } else {
                nldd_dn_solve(p, 0.0, 0.5, 1e-10, 200, &mut h)
            }
        };
        assert_eq!(s, NlddStatus::Ok);
        unsafe {
            assert!(nldd_history_converged(h));
            let n = nldd_history_len(h);
            assert!(n >= 2);
            assert!((nldd_history_lambda(h) - exact).abs() < 1e-9);
            let mut first = NlddRecord::default();
            let mut last = NlddRecord::default();
            assert_eq!(nldd_history_record(h, 0, &mut first), NlddStatus::Ok);
            assert_eq!(nldd_history_record(h, n - 1, &mut last), NlddStatus::Ok);
            assert_eq!(first.iteration, 0);
            assert!((first.error_inf - exact.abs()).abs() < 1e-12);
            assert!(last.error_inf < 1e-9 && last.inner_newton_total > 0);
            let mut none = NlddRecord::default();
            assert_eq!(nldd_history_record(h, n, &mut none), NlddStatus::InvalidInput);
            nldd_history_free(h);
        }
    }
    unsafe { nldd_problem_free(p) };
}

#[test]
fn errors_map_to_status_codes() {
    let mut p = ptr::null_mut();
    let s = unsafe { nldd_problem_new(1.0, NlddForcing::Zero, 0.0, 0.0, 0.0, 1.0, 0, 0.5, &mut p) };
    assert_eq!(s, NlddStatus::InvalidInput);
    assert!(p.is_null());
    assert!(!last_error().is_empty());

    let s = unsafe { nldd_problem_new(1.0, NlddForcing::Zero, 0.0, 0.0, 0.0, 1.0, 10, 0.5, ptr::null_mut()) };
    assert_eq!(s, NlddStatus::NullPointer);
    assert!(last_error().contains("out_problem"));

    let p = problem(1.0, 0.5);
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { nldd_dn_solve(p, 0.0, 1.5, 1e-10, 10, &mut h) }, NlddStatus::InvalidInput);
    assert!(last_error().contains("theta"));
    assert!(h.is_null());
    let mut v = 0.0;
    assert_eq!(unsafe { nldd_dtn(p, 2, 0.0, &mut v) }, NlddStatus::InvalidInput);
    // a successful call clears the message
    assert_eq!(unsafe { nldd_dtn(p, 0, 0.0, &mut v) }, NlddStatus::Ok);
    assert!(nldd_last_error().is_null());
    unsafe { nldd_problem_free(p) };

    let name = CString::new("no-such-experiment").unwrap();
    let dir = CString::new("unused").unwrap();
    assert_eq!(unsafe { nldd_run_experiment(name.as_ptr(), dir.as_ptr()) }, NlddStatus::UnknownExperiment);
    assert_eq!(unsafe { nldd_run_experiment(ptr::null(), dir.as_ptr()) }, NlddStatus::NullPointer);
    // freeing null is a no-op
    unsafe {
        nldd_problem_free(ptr::null_mut());
        nldd_history_free(ptr::null_mut());
    }
}

#[test]
fn run_experiment_writes_results() {
    let dir = tempfile::tempdir().unwrap();
    let name = CString::new("nilpotent-toy").unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    assert_eq!(unsafe { nldd_run_experiment(name.as_ptr(), out.as_ptr()) }, NlddStatus::Ok);
    assert!(dir.path().join("manifest.json").exists());
    let csvs = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "csv"))
        .count();
    assert!(csvs >= 3);
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(nldd_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn header_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

fn has_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok_and(|o| o.status.success())
}

#[test]
fn header_is_current_and_compiles_as_c() {
    let header = std::fs::read_to_string(header_dir().join("nldd.h")).unwrap();
    for f in [
        "nldd_problem_new",
        "nldd_dn_solve",
        "nldd_dnpen_solve",
        "nldd_optimal_theta",
        "nldd_dtn",
        "nldd_ntd",
        "nldd_run_experiment",
        "nldd_history_free",
        "nldd_last_error",
    ] {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
    if !has_cc() {
        eprintln!("no C compiler; skipping the compile check");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("check.c");
    std::fs::write(
        &src,
        "#include \"nldd.h\"\nint main(void) { NlddProblem *p = 0; return nldd_problem_new(1, NLDD_FORCING_ZERO, 0, 0, 0, 1, 10, 0.5, &p) != NLDD_STATUS_OK; }\n",
    )
    .unwrap();
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header_dir())
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}

fn static_lib() -> Option<PathBuf> {
    let target = std::env::var_os("CARGO_TARGET_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../target"));
    let lib = target.join("debug").join("libnldd_ffi.a");
    lib.exists().then_some(lib)
}

#[test]
fn c_program_links_and_solves() {
    let Some(lib) = static_lib().filter(|_| has_cc()) else {
        eprintln!("no static library or C compiler; skipping the link check");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("solve.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "nldd.h"
int main(void) {
  NlddProblem *p = NULL; NlddHistory *h = NULL; NlddOptimalTheta q;
  if (nldd_problem_new(1, NLDD_FORCING_LINEAR_RAMP, 0, 100, 0, -20, 200, 0.3, &p)) return 1;
  if (nldd_optimal_theta(p, &q)) return 2;
  if (nldd_dn_solve(p, 0, q.theta, 1e-12, 50, &h)) return 3;
  if (!nldd_history_converged(h)) return 4;
  printf("%zu\n", nldd_history_len(h));
  nldd_history_free(h);
  nldd_problem_free(p);
  return nldd_problem_new(1, NLDD_FORCING_ZERO, 0, 0, 0, 1, 0, 0.5, &p) == NLDD_STATUS_INVALID_INPUT ? 0 : 5;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("solve");
    let built = Command::new("cc")
        .arg("-I")
        .arg(header_dir())
        .arg(&src)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(built.success());
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let iterations: usize = String::from_utf8(run.stdout).unwrap().trim().parse().unwrap();
    assert!(iterations <= 10, "{iterations}");
}
