use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::ptr;

use impactopt_ffi::*;

fn scenario(name: &str) -> CString {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = impactopt_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_nonempty() {
    let v = unsafe { CStr::from_ptr(impactopt_version()) };
    assert!(!v.to_bytes().is_empty());
}

#[test]
fn null_arguments_are_rejected() {
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { impactopt_config_load(ptr::null(), &mut cfg) }, ImpactStatus::NullPointer);
    assert!(last_error().contains("path"));
    let mut obj = ImpactObjective::default();
    assert_eq!(unsafe { impactopt_forward(ptr::null(), ptr::null(), 0, &mut obj) }, ImpactStatus::NullPointer);
    assert_eq!(unsafe { impactopt_problem_design_size(ptr::null()) }, 0);
    unsafe {
        impactopt_config_free(ptr::null_mut());
        impactopt_problem_free(ptr::null_mut());
    }
}

#[test]
fn bad_config_reports_config_status() {
    let text = CString::new("not = [valid").unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { impactopt_config_parse(text.as_ptr(), &mut cfg) }, ImpactStatus::Config);
    assert!(cfg.is_null());
    assert!(!last_error().is_empty());
    let missing = CString::new("/nonexistent/run.toml").unwrap();
    let st = unsafe { impactopt_config_load(missing.as_ptr(), &mut cfg) };
    assert_ne!(st, ImpactStatus::Ok);
}

#[test]
fn forward_and_gradient_through_handles() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(impactopt_config_load(scenario("blast_check_8x2.toml").as_ptr(), &mut cfg), ImpactStatus::Ok);
        let mut p = ptr::null_mut();
        assert_eq!(impactopt_problem_new(cfg, &mut p), ImpactStatus::Ok);
        let n = impactopt_problem_design_size(p);
        assert_eq!(n, 16);
        let eta = vec![impactopt_problem_eta_init(p); n];

        let mut fwd = ImpactObjective::default();
        assert_eq!(impactopt_forward(p, eta.as_ptr(), n, &mut fwd), ImpactStatus::Ok);
        assert!(fwd.total > 0.0 && fwd.total.is_finite());

        let mut ev = ImpactObjective::default();
        let mut g = vec![0.0; n];
        assert_eq!(impactopt_evaluate(p, eta.as_ptr(), n, &mut ev, g.as_mut_ptr()), ImpactStatus::Ok);
        // A uniform design is a fixed point of the filter.
        assert!((ev.total - fwd.total).abs() <= 1e-12 * fwd.total);
        assert!(g.iter().all(|x| x.is_finite()) && g.iter().any(|x| *x != 0.0));

        assert_eq!(impactopt_forward(p, eta.as_ptr(), n - 1, &mut fwd), ImpactStatus::InvalidArgument);
        assert!(last_error().contains("length"));

        impactopt_problem_free(p);
        impactopt_config_free(cfg);
    }
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/impactopt.h")).unwrap();
    for sym in ["impactopt_config_load", "impactopt_evaluate", "impactopt_optimize", "impactopt_last_error", "IMPACT_STATUS_OK", "typedef struct ImpactProblem ImpactProblem"] {
        assert!(h.contains(sym), "{sym} missing from header");
    }
}
