//! C ABI over `dualappell`.
//!
//! Every fallible call returns a [`DaStatus`]; on failure a message is kept
//! per thread and can be read with [`da_last_error_message`]. Strings handed
//! out by the library are owned by the caller and released with
//! [`da_string_free`]. Handles are released with their matching `_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use dualappell::appell::{AppellSystem, PolyElement};
use dualappell::config::RunConfig;
use dualappell::dualsys::{s_transform, DualFunctional};
use dualappell::error::Error;
use dualappell::kingman::LambdaFunction;
use dualappell::scalar::{parse_rational, Scalar, ScalarKind};
use dualappell::verify::run_verify;
use num_complex::Complex64;
use num_rational::BigRational;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Invalid = 4,
    Truncation = 5,
    Envelope = 6,
    Io = 7,
    Panic = 8,
}

/// Result of a two-path S-transform evaluation.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DaSTransform {
    pub path_a: f64,
    pub path_b: f64,
    pub tail_bound: f64,
}

enum Inner {
    Rational(AppellSystem<BigRational>),
    Float(AppellSystem<f64>),
}

/// Opaque polynomial system built from a run configuration.
pub struct DaSystem {
    inner: Inner,
}

/// Opaque Kingman `Λ_s`.
pub struct DaLambda {
    inner: LambdaFunction,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> DaStatus {
    match e {
        Error::Parse(_) | Error::Json(_) => DaStatus::Parse,
        Error::Truncation { .. } => DaStatus::Truncation,
        Error::Envelope { .. } => DaStatus::Envelope,
        Error::Io(_) => DaStatus::Io,
        _ => DaStatus::Invalid,
    }
}

fn guard(f: impl FnOnce() -> Result<(), DaStatus>) -> DaStatus {
    match std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)) {
        Ok(Ok(())) => DaStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            DaStatus::Panic
        }
    }
}

fn fail(e: Error) -> DaStatus {
    set_error(&e.to_string());
    status_of(&e)
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, DaStatus> {
    if p.is_null() {
        set_error("null string argument");
        return Err(DaStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("argument is not valid UTF-8");
        DaStatus::InvalidUtf8
    })
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize) -> Result<&'a [f64], DaStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        set_error("null array argument");
        return Err(DaStatus::NullPointer);
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(out: *mut T, v: T) -> Result<(), DaStatus> {
    if out.is_null() {
        set_error("null output pointer");
        return Err(DaStatus::NullPointer);
    }
    out.write(v);
    Ok(())
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

fn exact_point(x: &[f64]) -> Result<Vec<BigRational>, DaStatus> {
    x.iter()
        .map(|v| {
            BigRational::from_float(*v).ok_or_else(|| fail(Error::Invalid(format!("non-finite coordinate {v}"))))
        })
        .collect()
}

/// Message of the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn da_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn da_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn da_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a system from run-configuration JSON (see the CLI `--config`).
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn da_system_from_config(config_json: *const c_char, out: *mut *mut DaSystem) -> DaStatus {
    guard(|| {
        let text = str_arg(config_json)?;
        let cfg = RunConfig::from_json_str(text).map_err(fail)?;
        let inner = match cfg.scalar {
            ScalarKind::Rational => Inner::Rational(cfg.build::<BigRational>().map_err(fail)?.system),
            ScalarKind::Float => Inner::Float(cfg.build::<f64>().map_err(fail)?.system),
            ScalarKind::Complex => return Err(fail(Error::Invalid("unsupported scalar kind".into()))),
        };
        write_out(out, Box::into_raw(Box::new(DaSystem { inner })))
    })
}

/// # Safety
/// `sys` must be null or a handle from [`da_system_from_config`].
#[no_mangle]
pub unsafe extern "C" fn da_system_free(sys: *mut DaSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

unsafe fn system<'a>(sys: *const DaSystem) -> Result<&'a DaSystem, DaStatus> {
    sys.as_ref().ok_or_else(|| {
        set_error("null system handle");
        DaStatus::NullPointer
    })
}

/// Writes `d`, `n1` and the degree cap `N`.
///
/// # Safety
/// `sys` must be a live handle; output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn da_system_shape(
    sys: *const DaSystem,
    dim: *mut usize,
    n1: *mut usize,
    n_cap: *mut usize,
) -> DaStatus {
    guard(|| {
        let (d, k, n) = match &system(sys)?.inner {
            Inner::Rational(s) => (s.dim(), s.n1(), s.n_cap()),
            Inner::Float(s) => (s.dim(), s.n1(), s.n_cap()),
        };
        write_out(dim, d)?;
        write_out(n1, k)?;
        write_out(n_cap, n)
    })
}

/// `P_ñ(z)` as tensor JSON (rational systems emit exact `"num/den"` strings).
///
/// # Safety
/// `z` must point to `len` doubles; `out` must be writable. Free the
/// returned string with [`da_string_free`].
#[no_mangle]
pub unsafe extern "C" fn da_system_p_kernel_json(
    sys: *const DaSystem,
    n: usize,
    z: *const f64,
    len: usize,
    out: *mut *mut c_char,
) -> DaStatus {
    guard(|| {
        let z = slice_arg(z, len)?;
        let json = match &system(sys)?.inner {
            Inner::Rational(s) => s.p_kernel(n, &exact_point(z)?).map_err(fail)?.to_json(),
            Inner::Float(s) => s.p_kernel(n, z).map_err(fail)?.to_json(),
        };
        write_out(out, to_c_string(json.to_string()))
    })
}

fn eval_generic<S: Scalar>(s: &AppellSystem<S>, element: &str, x: &[S]) -> Result<f64, DaStatus> {
    let v: serde_json::Value = serde_json::from_str(element).map_err(|e| fail(e.into()))?;
    let e = PolyElement::<S>::from_json(&v).map_err(fail)?;
    Ok(s.evaluate_poly(&e, x).map_err(fail)?.real_f64())
}

/// Value at `x` of a polynomial element given as JSON in either basis.
///
/// # Safety
/// `element_json` must be NUL-terminated; `x` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn da_system_evaluate(
    sys: *const DaSystem,
    element_json: *const c_char,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> DaStatus {
    guard(|| {
        let text = str_arg(element_json)?;
        let x = slice_arg(x, len)?;
        let v = match &system(sys)?.inner {
            Inner::Rational(s) => eval_generic(s, text, &exact_point(x)?)?,
            Inner::Float(s) => eval_generic(s, text, x)?,
        };
        write_out(out, v)
    })
}

fn st_generic<S: Scalar>(s: &AppellSystem<S>, functional: &str, theta: &[S]) -> Result<DaSTransform, DaStatus> {
    let v: serde_json::Value = serde_json::from_str(functional).map_err(|e| fail(e.into()))?;
    let f = DualFunctional::<S>::from_json(&v).map_err(fail)?;
    let st = s_transform(&f, s, theta).map_err(fail)?;
    Ok(DaSTransform {
        path_a: st.path_a.real_f64(),
        path_b: st.path_b.real_f64(),
        tail_bound: st.tail_bound,
    })
}

/// Two-path S-transform of a dual functional (JSON) at `theta`.
///
/// # Safety
/// `functional_json` must be NUL-terminated; `theta` must point to `len`
/// doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn da_system_s_transform(
    sys: *const DaSystem,
    functional_json: *const c_char,
    theta: *const f64,
    len: usize,
    out: *mut DaSTransform,
) -> DaStatus {
    guard(|| {
        let text = str_arg(functional_json)?;
        let theta = slice_arg(theta, len)?;
        let r = match &system(sys)?.inner {
            Inner::Rational(s) => st_generic(s, text, &exact_point(theta)?)?,
            Inner::Float(s) => st_generic(s, text, theta)?,
        };
        write_out(out, r)
    })
}

/// Runs every verification suite; writes the JSON report and whether all
/// suites passed.
///
/// # Safety
/// `config_json` must be NUL-terminated; output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn da_verify(config_json: *const c_char, report: *mut *mut c_char, all_pass: *mut bool) -> DaStatus {
    guard(|| {
        let text = str_arg(config_json)?;
        let cfg = RunConfig::from_json_str(text).map_err(fail)?;
        let r = run_verify(&cfg).map_err(fail)?;
        write_out(all_pass, r.all_pass)?;
        write_out(report, to_c_string(r.to_pretty()))
    })
}

/// `Λ_s` with `terms` coefficients; `s` is a rational literal like `"1/2"`.
///
/// # Safety
/// `s` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn da_lambda_new(s: *const c_char, terms: usize, out: *mut *mut DaLambda) -> DaStatus {
    guard(|| {
        let s = parse_rational(str_arg(s)?).map_err(fail)?;
        let inner = LambdaFunction::new(s, terms).map_err(fail)?;
        write_out(out, Box::into_raw(Box::new(DaLambda { inner })))
    })
}

/// # Safety
/// `l` must be null or a handle from [`da_lambda_new`].
#[no_mangle]
pub unsafe extern "C" fn da_lambda_free(l: *mut DaLambda) {
    if !l.is_null() {
        drop(Box::from_raw(l));
    }
}

/// `Λ_s(re + i·im)` and its truncation-tail bound. Fails with
/// [`DaStatus::Envelope`] outside the accuracy envelope.
///
/// # Safety
/// `l` must be a live handle; output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn da_lambda_eval(
    l: *const DaLambda,
    re: f64,
    im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
    tail_bound: *mut f64,
) -> DaStatus {
    guard(|| {
        let l = l.as_ref().ok_or_else(|| {
            set_error("null lambda handle");
            DaStatus::NullPointer
        })?;
        let v = l.inner.eval(Complex64::new(re, im)).map_err(fail)?;
        write_out(out_re, v.re)?;
        write_out(out_im, v.im)?;
        write_out(tail_bound, v.tail_bound)
    })
}
