use std::ffi::{CStr, CString};
use std::ptr;

use chatterjee_ffi::*;

fn last_error() -> String {
    let p = xi_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn model(spec: &str) -> *mut XiModel {
    let spec = CString::new(spec).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { xi_model_from_json(spec.as_ptr(), &mut m) }, XiStatus::Ok);
    m
}

#[test]
fn xi_of_monotone_sample() {
    let x = [1.0, 2.0, 3.0];
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(xi_sample_new(x.as_ptr(), x.as_ptr(), 3, &mut s), XiStatus::Ok);
        assert_eq!(xi_sample_len(s), 3);
        let mut v = f64::NAN;
        assert_eq!(xi_compute(s, 7, &mut v), XiStatus::Ok);
        assert_eq!(v, 0.25);
        xi_sample_free(s);
    }
}

#[test]
fn constant_y_reports_all_y_equal() {
    let x = [1.0, 2.0, 3.0];
    let y = [4.0; 3];
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(xi_sample_new(x.as_ptr(), y.as_ptr(), 3, &mut s), XiStatus::Ok);
        let mut v = 0.0;
        assert_eq!(xi_compute(s, 0, &mut v), XiStatus::AllYEqual);
        assert!(last_error().starts_with("AllYEqual"));
        let name = CStr::from_ptr(xi_status_name(XiStatus::AllYEqual));
        assert_eq!(name.to_str().unwrap(), "AllYEqual");
        xi_sample_free(s);
    }
}

#[test]
fn null_and_bad_inputs() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(xi_sample_new(ptr::null(), ptr::null(), 0, &mut s), XiStatus::NullPointer);
        let one = [1.0];
        assert_eq!(xi_sample_new(one.as_ptr(), one.as_ptr(), 1, &mut s), XiStatus::TooFewObservations);
        let nan = [1.0, f64::NAN];
        assert_eq!(xi_sample_new(nan.as_ptr(), nan.as_ptr(), 2, &mut s), XiStatus::NonFinite);
        let mut v = 0.0;
        assert_eq!(xi_compute(ptr::null(), 0, &mut v), XiStatus::NullPointer);
        xi_sample_free(ptr::null_mut());
        xi_model_free(ptr::null_mut());

        let spec = CString::new(r#"{"name": "no_such_model"}"#).unwrap();
        let mut m = ptr::null_mut();
        assert_eq!(xi_model_from_json(spec.as_ptr(), &mut m), XiStatus::UnknownModel);
        let spec = CString::new("not json").unwrap();
        assert_eq!(xi_model_from_json(spec.as_ptr(), &mut m), XiStatus::BadParams);
        assert!(m.is_null());
    }
}

#[test]
fn theory_exact_and_mc() {
    let m = model(r#"{"name": "indep_binomial"}"#);
    unsafe {
        let mut t: XiTheory = std::mem::zeroed();
        assert_eq!(xi_theory_exact(m, &mut t), XiStatus::Ok);
        assert_eq!(t.method, 0);
        assert!((t.sigma_sq - 0.447960879849005).abs() < 1e-10);
        assert!(t.xi.abs() < 1e-12);
        assert!(t.sigma_sq_se.is_nan());
        xi_model_free(m);
    }
    let u = model(r#"{"name": "indep_uniform"}"#);
    unsafe {
        let mut t: XiTheory = std::mem::zeroed();
        assert_eq!(xi_theory_exact(u, &mut t), XiStatus::NoPmf);
        assert_eq!(xi_theory_mc(u, 1_000, 100, 3, &mut t), XiStatus::Ok);
        assert_eq!(t.method, 1);
        assert!((t.sigma_sq - 0.4).abs() < 6.0 * t.sigma_sq_se + 0.02);
        assert_eq!(xi_theory_mc(u, 10, 10, 3, &mut t), XiStatus::InvalidArgument);
        xi_model_free(u);
    }
}

#[test]
fn intervals() {
    let m = model(r#"{"pmf": {"support_x": [0, 1], "support_y": [0, 1, 2], "prob": [[0.3, 0.1, 0.1], [0.1, 0.1, 0.3]]}}"#);
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(xi_model_sample(m, 500, 1, &mut s), XiStatus::Ok);
        let mut a: XiInterval = std::mem::zeroed();
        assert_eq!(xi_ci_plugin(s, 0.9, 2, &mut a), XiStatus::Ok);
        assert!(a.lower <= a.point && a.point <= a.upper);
        let mut b: XiInterval = std::mem::zeroed();
        assert_eq!(xi_ci_bootstrap(s, 0, 200, 0.9, 2, &mut b), XiStatus::Ok);
        assert!(b.lower <= b.upper);
        assert_eq!(b.level, 0.9);
        assert_eq!(xi_ci_bootstrap(s, 1, 200, 0.9, 2, &mut b), XiStatus::BadM);
        assert_eq!(xi_ci_plugin(s, 1.5, 2, &mut a), XiStatus::InvalidArgument);
        xi_sample_free(s);
        xi_model_free(m);
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/chatterjee.h")).unwrap();
    for name in [
        "xi_sample_new",
        "xi_sample_free",
        "xi_model_from_json",
        "xi_model_sample",
        "xi_compute",
        "xi_theory_exact",
        "xi_theory_mc",
        "xi_ci_plugin",
        "xi_ci_bootstrap",
        "xi_last_error_message",
        "typedef struct XiSample XiSample",
        "XI_STATUS_ALL_Y_EQUAL",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}
