//! C ABI over `chatterjee-core`.
//!
//! Objects are opaque handles created by `*_new`/`*_from_json`/`*_draw` and
//! released with the matching `*_free`. Every fallible call returns an
//! [`XiStatus`]; on failure [`xi_last_error_message`] describes the error on
//! the calling thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use chatterjee_core::error::XiError;
use chatterjee_core::estimator::xi;
use chatterjee_core::inference::{moon_bootstrap_ci, normal_ci, CiResult};
use chatterjee_core::model::{sample, Model, ModelSpec, Sample};
use chatterjee_core::theory::{exact_sigma, mc_theory, Method, TheoryReport};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Utf8 = 3,
    Json = 4,
    UnknownModel = 5,
    BadParams = 6,
    BadPmf = 7,
    DegenerateY = 8,
    AllYEqual = 9,
    TooFewObservations = 10,
    NonFinite = 11,
    SupportTooLarge = 12,
    NoXTies = 13,
    BadM = 14,
    NoPmf = 15,
    ArityGuard = 16,
    ZeroSigma = 17,
    Io = 18,
    Panic = 99,
}

fn status_of(err: &XiError) -> XiStatus {
    match err {
        XiError::NegativeProbability { .. }
        | XiError::MassNotOne { .. }
        | XiError::DimensionMismatch(_)
        | XiError::BadSupport(_) => XiStatus::BadPmf,
        XiError::DegenerateY => XiStatus::DegenerateY,
        XiError::AllYEqual => XiStatus::AllYEqual,
        XiError::NonFinite(_) | XiError::NonFiniteValue { .. } => XiStatus::NonFinite,
        XiError::UnknownModel(_) => XiStatus::UnknownModel,
        XiError::BadParams(_) => XiStatus::BadParams,
        XiError::TooFewObservations(_) | XiError::TooFewRows(_) => XiStatus::TooFewObservations,
        XiError::ArityTooLargeForN { .. } | XiError::ArityGuard(_) => XiStatus::ArityGuard,
        XiError::SupportTooLarge { .. } => XiStatus::SupportTooLarge,
        XiError::NoXTies => XiStatus::NoXTies,
        XiError::BadM { .. } => XiStatus::BadM,
        XiError::InvalidArgument(_) | XiError::ParseError { .. } => XiStatus::InvalidArgument,
        XiError::ZeroSigma => XiStatus::ZeroSigma,
        XiError::Io(_) => XiStatus::Io,
        XiError::Json(_) => XiStatus::Json,
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: XiStatus, message: impl Into<String>) -> XiStatus {
    set_error(message.into());
    status
}

fn fail_with(err: XiError) -> XiStatus {
    fail(status_of(&err), format!("{}: {err}", err.name()))
}

fn guard(f: impl FnOnce() -> XiStatus) -> XiStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(XiStatus::Panic, "internal panic"),
    }
}

/// Paired observations.
pub struct XiSample(Sample);

/// A law of (X, Y): builtin, PMF-backed or generative.
pub struct XiModel(Model);

/// Population quantities. Fields without a value are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct XiTheory {
    /// 0 for exact enumeration, 1 for Monte Carlo.
    pub method: i32,
    pub mu1: f64,
    pub mu2: f64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub sigma12: f64,
    pub sigma_sq: f64,
    pub xi: f64,
    pub xi_dss: f64,
    pub sigma_sq_se: f64,
    pub xi_se: f64,
}

impl From<&TheoryReport> for XiTheory {
    fn from(r: &TheoryReport) -> Self {
        XiTheory {
            method: match r.method {
                Method::Exact => 0,
                Method::MonteCarlo => 1,
            },
            mu1: r.mu1,
            mu2: r.mu2,
            sigma1_sq: r.sigma1_sq,
            sigma2_sq: r.sigma2_sq,
            sigma12: r.sigma12,
            sigma_sq: r.sigma_sq,
            xi: r.xi,
            xi_dss: r.xi_dss.unwrap_or(f64::NAN),
            sigma_sq_se: r.se.map_or(f64::NAN, |s| s.sigma_sq),
            xi_se: r.se.map_or(f64::NAN, |s| s.xi),
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct XiInterval {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

impl From<&CiResult> for XiInterval {
    fn from(c: &CiResult) -> Self {
        XiInterval { point: c.point, lower: c.lower, upper: c.upper, level: c.level }
    }
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn xi_status_name(status: XiStatus) -> *const c_char {
    let s: &'static CStr = match status {
        XiStatus::Ok => c"Ok",
        XiStatus::NullPointer => c"NullPointer",
        XiStatus::InvalidArgument => c"InvalidArgument",
        XiStatus::Utf8 => c"Utf8",
        XiStatus::Json => c"Json",
        XiStatus::UnknownModel => c"UnknownModel",
        XiStatus::BadParams => c"BadParams",
        XiStatus::BadPmf => c"BadPmf",
        XiStatus::DegenerateY => c"DegenerateY",
        XiStatus::AllYEqual => c"AllYEqual",
        XiStatus::TooFewObservations => c"TooFewObservations",
        XiStatus::NonFinite => c"NonFinite",
        XiStatus::SupportTooLarge => c"SupportTooLarge",
        XiStatus::NoXTies => c"NoXTies",
        XiStatus::BadM => c"BadM",
        XiStatus::NoPmf => c"NoPmf",
        XiStatus::ArityGuard => c"ArityGuard",
        XiStatus::ZeroSigma => c"ZeroSigma",
        XiStatus::Io => c"Io",
        XiStatus::Panic => c"Panic",
    };
    s.as_ptr()
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn xi_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Copies `n` pairs into a new sample.
///
/// # Safety
/// `x` and `y` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn xi_sample_new(
    x: *const f64,
    y: *const f64,
    n: usize,
    out: *mut *mut XiSample,
) -> XiStatus {
    guard(|| {
        if x.is_null() || y.is_null() || out.is_null() {
            return fail(XiStatus::NullPointer, "null argument");
        }
        let (xs, ys) = unsafe { (std::slice::from_raw_parts(x, n), std::slice::from_raw_parts(y, n)) };
        match Sample::from_columns(xs, ys) {
            Ok(s) => {
                unsafe { *out = Box::into_raw(Box::new(XiSample(s))) };
                XiStatus::Ok
            }
            Err(e) => fail_with(e),
        }
    })
}

/// Number of observations, or 0 for NULL.
///
/// # Safety
/// `sample` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn xi_sample_len(sample: *const XiSample) -> usize {
    unsafe { sample.as_ref() }.map_or(0, |s| s.0.len())
}

/// # Safety
/// `sample` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn xi_sample_free(sample: *mut XiSample) {
    if !sample.is_null() {
        drop(unsafe { Box::from_raw(sample) });
    }
}

/// Builds a model from a JSON spec such as
/// `{"name": "indep_binomial", "params": {"trials": 10, "p": 0.333}}` or
/// `{"pmf": {"support_x": [...], "support_y": [...], "prob": [[...]]}}`.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn xi_model_from_json(spec: *const c_char, out: *mut *mut XiModel) -> XiStatus {
    guard(|| {
        if spec.is_null() || out.is_null() {
            return fail(XiStatus::NullPointer, "null argument");
        }
        let text = match unsafe { CStr::from_ptr(spec) }.to_str() {
            Ok(t) => t,
            Err(e) => return fail(XiStatus::Utf8, e.to_string()),
        };
        match ModelSpec::parse(text).and_then(|s| s.build()) {
            Ok(m) => {
                unsafe { *out = Box::into_raw(Box::new(XiModel(m))) };
                XiStatus::Ok
            }
            Err(e) => fail_with(e),
        }
    })
}

/// # Safety
/// `model` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn xi_model_free(model: *mut XiModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Draws `n` i.i.d. pairs from `model`.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn xi_model_sample(
    model: *const XiModel,
    n: usize,
    seed: u64,
    out: *mut *mut XiSample,
) -> XiStatus {
    guard(|| {
        let Some(m) = (unsafe { model.as_ref() }) else {
            return fail(XiStatus::NullPointer, "null model");
        };
        if out.is_null() {
            return fail(XiStatus::NullPointer, "null output");
        }
        match sample(&m.0, n, seed) {
            Ok(s) => {
                unsafe { *out = Box::into_raw(Box::new(XiSample(s))) };
                XiStatus::Ok
            }
            Err(e) => fail_with(e),
        }
    })
}

/// ξₙ with X ties broken from `seed`.
///
/// # Safety
/// `sample` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn xi_compute(sample: *const XiSample, seed: u64, out: *mut f64) -> XiStatus {
    guard(|| {
        let Some(s) = (unsafe { sample.as_ref() }) else {
            return fail(XiStatus::NullPointer, "null sample");
        };
        if out.is_null() {
            return fail(XiStatus::NullPointer, "null output");
        }
        match xi(&s.0, seed) {
            Ok(v) => {
                unsafe { *out = v };
                XiStatus::Ok
            }
            Err(e) => fail_with(e),
        }
    })
}

fn write_theory(out: *mut XiTheory, r: chatterjee_core::Result<TheoryReport>) -> XiStatus {
    match r {
        Ok(r) => {
            unsafe { *out = XiTheory::from(&r) };
            XiStatus::Ok
        }
        Err(e) => fail_with(e),
    }
}

/// Exact limiting quantities; fails with `NoPmf` for generative models.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn xi_theory_exact(model: *const XiModel, out: *mut XiTheory) -> XiStatus {
    guard(|| {
        let Some(m) = (unsafe { model.as_ref() }) else {
            return fail(XiStatus::NullPointer, "null model");
        };
        if out.is_null() {
            return fail(XiStatus::NullPointer, "null output");
        }
        let Some(pmf) = m.0.pmf() else {
            return fail(XiStatus::NoPmf, "model has no finite PMF; use xi_theory_mc");
        };
        write_theory(out, exact_sigma(pmf))
    })
}

/// Monte Carlo limiting quantities.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn xi_theory_mc(
    model: *const XiModel,
    n_outer: usize,
    n_inner: usize,
    seed: u64,
    out: *mut XiTheory,
) -> XiStatus {
    guard(|| {
        let Some(m) = (unsafe { model.as_ref() }) else {
            return fail(XiStatus::NullPointer, "null model");
        };
        if out.is_null() {
            return fail(XiStatus::NullPointer, "null output");
        }
        write_theory(out, mc_theory(&m.0, n_outer, n_inner, seed))
    })
}

fn write_interval(out: *mut XiInterval, r: chatterjee_core::Result<CiResult>) -> XiStatus {
    match r {
        Ok(c) => {
            unsafe { *out = XiInterval::from(&c) };
            XiStatus::Ok
        }
        Err(e) => fail_with(e),
    }
}

/// Normal interval with the plug-in variance.
///
/// # Safety
/// `sample` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn xi_ci_plugin(
    sample: *const XiSample,
    level: f64,
    seed: u64,
    out: *mut XiInterval,
) -> XiStatus {
    guard(|| {
        let Some(s) = (unsafe { sample.as_ref() }) else {
            return fail(XiStatus::NullPointer, "null sample");
        };
        if out.is_null() {
            return fail(XiStatus::NullPointer, "null output");
        }
        write_interval(out, normal_ci(&s.0, level, seed))
    })
}

/// m-out-of-n bootstrap interval; `m = 0` selects the default ⌈n^(2/3)⌉.
///
/// # Safety
/// `sample` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn xi_ci_bootstrap(
    sample: *const XiSample,
    m: usize,
    b: usize,
    level: f64,
    seed: u64,
    out: *mut XiInterval,
) -> XiStatus {
    guard(|| {
        let Some(s) = (unsafe { sample.as_ref() }) else {
            return fail(XiStatus::NullPointer, "null sample");
        };
        if out.is_null() {
            return fail(XiStatus::NullPointer, "null output");
        }
        let m = (m != 0).then_some(m);
        write_interval(out, moon_bootstrap_ci(&s.0, m, b, level, seed))
    })
}
