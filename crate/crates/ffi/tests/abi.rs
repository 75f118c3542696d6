use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use dualappell_ffi::*;

const HERMITE: &str = r#"{"d":1,"n1":1,"N":4,"scalar":"rational","chi":{"name":"exp"},
    "gamma":{"kind":"gaussian"},"measure":{"kind":"gaussian"}}"#;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(da_last_error_message()) }.to_str().unwrap().to_owned()
}

fn hermite() -> *mut DaSystem {
    let mut sys = ptr::null_mut();
    let cfg = cstr(HERMITE);
    assert_eq!(unsafe { da_system_from_config(cfg.as_ptr(), &mut sys) }, DaStatus::Ok);
    assert!(!sys.is_null());
    sys
}

#[test]
fn system_shape_and_kernel() {
    let sys = hermite();
    let (mut d, mut n1, mut n) = (0, 0, 0);
    assert_eq!(unsafe { da_system_shape(sys, &mut d, &mut n1, &mut n) }, DaStatus::Ok);
    assert_eq!((d, n1, n), (1, 1, 4));

    let z = [2.0];
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { da_system_p_kernel_json(sys, 3, z.as_ptr(), 1, &mut out) }, DaStatus::Ok);
    let text = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_owned();
    unsafe { da_string_free(out) };
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    // P₃(2) = 8 − 6
    assert_eq!(v["coeffs"][0][1], "2/1");
    unsafe { da_system_free(sys) };
}

#[test]
fn evaluate_appell_element() {
    let sys = hermite();
    let element = cstr(
        r#"{"basis":"appell","n1":1,"d":1,"scalar":"rational","blocks":[
            {"dim":1,"rank":0,"coeffs":[]},
            {"dim":1,"rank":1,"coeffs":[]},
            {"dim":1,"rank":2,"coeffs":[]},
            {"dim":1,"rank":3,"coeffs":[]},
            {"dim":1,"rank":4,"coeffs":[[[4],"1"]]}]}"#,
    );
    let x = [1.0];
    let mut v = 0.0;
    let st = unsafe { da_system_evaluate(sys, element.as_ptr(), x.as_ptr(), 1, &mut v) };
    assert_eq!(st, DaStatus::Ok, "{}", last_error());
    // P₄(1) = 1 − 6 + 3
    assert_eq!(v, -2.0);
    unsafe { da_system_free(sys) };
}

#[test]
fn s_transform_of_delta() {
    let sys = hermite();
    // δ₀ truncated to blocks 0..=2: S-transform at θ is γ(θ)χ₀ up to the tail.
    let f = cstr(
        r#"{"dual":true,"n1":1,"d":1,"scalar":"rational","blocks":[
            {"dim":1,"rank":0,"coeffs":[[[0],"1"]]},
            {"dim":1,"rank":1,"coeffs":[]},
            {"dim":1,"rank":2,"coeffs":[]}]}"#,
    );
    let theta = [0.25];
    let mut out = DaSTransform::default();
    let st = unsafe { da_system_s_transform(sys, f.as_ptr(), theta.as_ptr(), 1, &mut out) };
    assert_eq!(st, DaStatus::Ok, "{}", last_error());
    assert!((out.path_a - out.path_b).abs() <= out.tail_bound + 1e-15);
    unsafe { da_system_free(sys) };
}

#[test]
fn errors_are_reported() {
    let mut sys = ptr::null_mut();
    let bad = cstr(r#"{"d":1}"#);
    assert_eq!(unsafe { da_system_from_config(bad.as_ptr(), &mut sys) }, DaStatus::Parse);
    assert!(!last_error().is_empty());
    assert!(sys.is_null());

    let zero = cstr(
        r#"{"d":1,"n1":1,"N":2,"scalar":"rational","chi":{"coeffs":[1,0,1]},
            "gamma":{"kind":"unit"},"measure":{"kind":"gaussian"}}"#,
    );
    assert_eq!(unsafe { da_system_from_config(zero.as_ptr(), &mut sys) }, DaStatus::Invalid);

    assert_eq!(unsafe { da_system_from_config(ptr::null(), &mut sys) }, DaStatus::NullPointer);

    let h = hermite();
    let mut out = ptr::null_mut();
    let z = [0.0];
    assert_eq!(unsafe { da_system_p_kernel_json(h, 9, z.as_ptr(), 1, &mut out) }, DaStatus::Truncation);
    unsafe { da_system_free(h) };
}

#[test]
fn lambda_handle() {
    let mut l = ptr::null_mut();
    let s = cstr("1/2");
    assert_eq!(unsafe { da_lambda_new(s.as_ptr(), 40, &mut l) }, DaStatus::Ok);
    let (mut re, mut im, mut tail) = (0.0, 0.0, 0.0);
    assert_eq!(
        unsafe { da_lambda_eval(l, std::f64::consts::PI, 0.0, &mut re, &mut im, &mut tail) },
        DaStatus::Ok
    );
    assert!(re.abs() < 1e-12 && im == 0.0 && tail < 1e-12);
    assert_eq!(
        unsafe { da_lambda_eval(l, 80.0, 0.0, &mut re, &mut im, &mut tail) },
        DaStatus::Envelope
    );
    unsafe { da_lambda_free(l) };
}

#[test]
fn verify_through_abi() {
    let cfg = cstr(HERMITE);
    let mut report = ptr::null_mut();
    let mut pass = false;
    assert_eq!(unsafe { da_verify(cfg.as_ptr(), &mut report, &mut pass) }, DaStatus::Ok);
    assert!(pass);
    let text = unsafe { CStr::from_ptr(report) }.to_str().unwrap().to_owned();
    unsafe { da_string_free(report) };
    assert!(text.contains("\"schema\": 1"));
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(da_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/dualappell.h");
    let text = std::fs::read_to_string(&header).expect("generated header");
    for sym in ["da_system_from_config", "da_lambda_eval", "da_verify", "DA_STATUS_ENVELOPE"] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
    let Ok(status) = Command::new("cc")
        .args(["-fsyntax-only", "-x", "c"])
        .arg(&header)
        .status()
    else {
        return;
    };
    assert!(status.success());
}
