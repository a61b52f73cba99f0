//! C ABI for `bcdist`.
//!
//! Distributions cross the boundary as JSON (the same tagged format the CLI
//! reads) and live behind the opaque [`BcdistDistribution`] handle. Every
//! fallible call returns a [`BcdistStatus`]; the message of the last failure
//! on the calling thread is available from [`bcdist_last_error`]. Strings
//! returned by this library must be released with [`bcdist_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bcdist::gaussian_distance::{bc_between, bc_normal_uni};
use bcdist::reduce::jl_min_dimension;
use bcdist::{Distribution, DistributionSpec, Error, GaussianUni, QuadConfig};

/// Result of a call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcdistStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    Numerical = 4,
    Panic = 5,
}

/// Opaque distribution handle.
pub struct BcdistDistribution {
    inner: Distribution,
}

/// Bhattacharyya coefficient, distance and coefficient error estimate.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcdistDivergence {
    pub coefficient: f64,
    pub distance: f64,
    pub error_estimate: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: BcdistStatus, msg: impl Into<String>) -> BcdistStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> BcdistStatus {
    let status = if e.is_numerical() {
        BcdistStatus::Numerical
    } else {
        BcdistStatus::InvalidInput
    };
    fail(status, e.to_string())
}

fn guard<F: FnOnce() -> BcdistStatus>(f: F) -> BcdistStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(BcdistStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, BcdistStatus> {
    if s.is_null() {
        return Err(fail(BcdistStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(BcdistStatus::InvalidUtf8, "string argument is not UTF-8"))
}

/// Parses and validates a distribution from JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer. On
/// success `*out` owns a handle to be released with
/// [`bcdist_distribution_free`].
#[no_mangle]
pub unsafe extern "C" fn bcdist_distribution_from_json(json: *const c_char, out: *mut *mut BcdistDistribution) -> BcdistStatus {
    guard(|| {
        if out.is_null() {
            return fail(BcdistStatus::NullPointer, "null output pointer");
        }
        *out = ptr::null_mut();
        let text = match read_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let spec: DistributionSpec = match serde_json::from_str(text) {
            Ok(s) => s,
            Err(e) => return fail(BcdistStatus::InvalidInput, e.to_string()),
        };
        match Distribution::try_from(spec) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(BcdistDistribution { inner }));
                BcdistStatus::Ok
            }
            Err(v) => fail(BcdistStatus::InvalidInput, v.to_string()),
        }
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `d` must come from [`bcdist_distribution_from_json`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn bcdist_distribution_free(d: *mut BcdistDistribution) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Dimension of the distribution (category count for discrete ones).
///
/// # Safety
/// `d` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bcdist_distribution_dim(d: *const BcdistDistribution, out: *mut usize) -> BcdistStatus {
    guard(|| {
        if d.is_null() || out.is_null() {
            return fail(BcdistStatus::NullPointer, "null argument");
        }
        *out = match &(*d).inner {
            Distribution::Discrete(x) => x.len(),
            Distribution::Normal(_) | Distribution::TruncatedNormal(_) => 1,
            Distribution::Mvn(x) => x.dim(),
            Distribution::TruncatedMvn(x) => x.dim(),
        };
        BcdistStatus::Ok
    })
}

/// JSON form of a handle, or null on failure. Free with [`bcdist_string_free`].
///
/// # Safety
/// `d` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bcdist_distribution_to_json(d: *const BcdistDistribution) -> *mut c_char {
    if d.is_null() {
        set_error("null handle".into());
        return ptr::null_mut();
    }
    match serde_json::to_string(&(*d).inner).map(CString::new) {
        Ok(Ok(s)) => s.into_raw(),
        _ => {
            set_error("serialization failed".into());
            ptr::null_mut()
        }
    }
}

/// Bhattacharyya distance between two handles. `seed` drives the
/// randomized rectangle-probability rule used by truncated multivariate
/// distributions and is ignored otherwise.
///
/// # Safety
/// `p`, `q` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bcdist_distance(p: *const BcdistDistribution, q: *const BcdistDistribution, seed: u64, out: *mut BcdistDivergence) -> BcdistStatus {
    guard(|| {
        if p.is_null() || q.is_null() || out.is_null() {
            return fail(BcdistStatus::NullPointer, "null argument");
        }
        let cfg = QuadConfig::default().with_seed(seed);
        match bc_between(&(*p).inner, &(*q).inner, &cfg) {
            Ok(d) => {
                *out = BcdistDivergence {
                    coefficient: d.coefficient,
                    distance: d.distance,
                    error_estimate: d.error_estimate,
                };
                BcdistStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Closed-form distance between `N(mu_p, var_p)` and `N(mu_q, var_q)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bcdist_normal_distance(mu_p: f64, var_p: f64, mu_q: f64, var_q: f64, out: *mut f64) -> BcdistStatus {
    guard(|| {
        if out.is_null() {
            return fail(BcdistStatus::NullPointer, "null output pointer");
        }
        let p = match GaussianUni::new(mu_p, var_p) {
            Ok(p) => p,
            Err(v) => return fail(BcdistStatus::InvalidInput, v.to_string()),
        };
        let q = match GaussianUni::new(mu_q, var_q) {
            Ok(q) => q,
            Err(v) => return fail(BcdistStatus::InvalidInput, v.to_string()),
        };
        *out = bc_normal_uni(&p, &q).distance;
        BcdistStatus::Ok
    })
}

/// Smallest projection dimension for `n` points at distortion `epsilon`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bcdist_jl_min_dimension(n: usize, epsilon: f64, out: *mut usize) -> BcdistStatus {
    guard(|| {
        if out.is_null() {
            return fail(BcdistStatus::NullPointer, "null output pointer");
        }
        match jl_min_dimension(n, epsilon) {
            Ok(k) => {
                *out = k;
                BcdistStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Copy of the last error message on this thread, or null when none.
/// Free with [`bcdist_string_free`].
#[no_mangle]
pub extern "C" fn bcdist_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| match &*e.borrow() {
        Some(s) => s.clone().into_raw(),
        None => ptr::null_mut(),
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn bcdist_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn bcdist_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
