//! C ABI over `gauss_eof`.
//!
//! Objects cross the boundary as opaque pointers created by `*_new` or
//! computed by `ge_eof` and released by the matching `*_free`. Every
//! fallible call returns a [`GeStatus`]; on failure the message is kept per
//! thread and can be copied out with [`ge_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use gauss_eof::eof::{eof_with, EofReport};
use gauss_eof::epr::{entanglement_of_squeezing, lambda_theta_moments};
use gauss_eof::linalg::{Mat4, Vec4};
use gauss_eof::{CovMat4, Error, Tolerances};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    SolverFailure = 3,
    /// The result has no such field, e.g. the canonical form of a separable state.
    NotAvailable = 4,
    Panic = 5,
}

/// Opaque covariance matrix (with optional first moments).
pub struct GeCovariance(CovMat4);

/// Opaque entanglement-of-formation result.
pub struct GeEofResult(EofReport);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GeCanonicalForm {
    pub r0: f64,
    pub theta0: f64,
    pub u: f64,
    pub v: f64,
    pub alpha0: f64,
    pub beta0: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> GeStatus {
    if err.is_input_error() {
        GeStatus::InvalidInput
    } else {
        GeStatus::SolverFailure
    }
}

fn guard(f: impl FnOnce() -> Result<(), (GeStatus, String)>) -> GeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            GeStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            GeStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (GeStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (GeStatus, String) {
    (GeStatus::NullPointer, format!("{what} is null"))
}

/// Creates a covariance from 16 row-major entries in the ordering
/// `(x_A, p_A, x_B, p_B)`, with the vacuum equal to `I/2`.
///
/// # Safety
/// `rows` must point to 16 readable doubles and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ge_covariance_new(rows: *const f64, out: *mut *mut GeCovariance) -> GeStatus {
    guard(|| {
        if rows.is_null() {
            return Err(null("rows"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let entries = std::slice::from_raw_parts(rows, 16);
        let v = CovMat4::new(Mat4::from_row_slice(entries)).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(GeCovariance(v)));
        Ok(())
    })
}

/// Sets the first moments.
///
/// # Safety
/// `cov` must come from [`ge_covariance_new`]; `mean` must point to 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn ge_covariance_set_mean(cov: *mut GeCovariance, mean: *const f64) -> GeStatus {
    guard(|| {
        let cov = cov.as_mut().ok_or_else(|| null("cov"))?;
        if mean.is_null() {
            return Err(null("mean"));
        }
        let m = Vec4::from_column_slice(std::slice::from_raw_parts(mean, 4));
        if m.iter().any(|x| !x.is_finite()) {
            return Err(lib_err(Error::NonFinite));
        }
        cov.0 = cov.0.clone().with_mean(m);
        Ok(())
    })
}

/// # Safety
/// `cov` must be null or come from [`ge_covariance_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ge_covariance_free(cov: *mut GeCovariance) {
    if !cov.is_null() {
        drop(Box::from_raw(cov));
    }
}

/// Writes whether the covariance satisfies the uncertainty principle.
///
/// # Safety
/// `cov` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ge_covariance_is_physical(cov: *const GeCovariance, out: *mut bool) -> GeStatus {
    guard(|| {
        let cov = cov.as_ref().ok_or_else(|| null("cov"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = cov.0.validate().is_physical;
        Ok(())
    })
}

/// `<Lambda_theta>` including first moments.
///
/// # Safety
/// `cov` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ge_lambda_theta(cov: *const GeCovariance, theta: f64, out: *mut f64) -> GeStatus {
    guard(|| {
        let cov = cov.as_ref().ok_or_else(|| null("cov"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = lambda_theta_moments(&cov.0, theta);
        Ok(())
    })
}

/// Computes the entanglement of formation with default tolerances.
///
/// # Safety
/// `cov` must be valid and `out` writable. The result must be released
/// with [`ge_eof_result_free`].
#[no_mangle]
pub unsafe extern "C" fn ge_eof(cov: *const GeCovariance, out: *mut *mut GeEofResult) -> GeStatus {
    guard(|| {
        let cov = cov.as_ref().ok_or_else(|| null("cov"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let rep = eof_with(&cov.0, &Tolerances::default()).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(GeEofResult(rep)));
        Ok(())
    })
}

/// # Safety
/// `res` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ge_eof_result_ebits(res: *const GeEofResult, out: *mut f64) -> GeStatus {
    guard(|| {
        let res = res.as_ref().ok_or_else(|| null("res"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = res.0.ebits;
        Ok(())
    })
}

/// # Safety
/// `res` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ge_eof_result_separable(res: *const GeEofResult, out: *mut bool) -> GeStatus {
    guard(|| {
        let res = res.as_ref().ok_or_else(|| null("res"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = res.0.separable;
        Ok(())
    })
}

/// Canonical parameters; `NotAvailable` for separable states.
///
/// # Safety
/// `res` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ge_eof_result_canonical(res: *const GeEofResult, out: *mut GeCanonicalForm) -> GeStatus {
    guard(|| {
        let res = res.as_ref().ok_or_else(|| null("res"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let red = res.0.canonical.as_ref().ok_or((GeStatus::NotAvailable, "state is separable".to_string()))?;
        let f = red.form;
        *out = GeCanonicalForm { r0: f.r0, theta0: f.theta0, u: f.u, v: f.v, alpha0: f.alpha0, beta0: f.beta0 };
        Ok(())
    })
}

/// # Safety
/// `res` must be null or come from [`ge_eof`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ge_eof_result_free(res: *mut GeEofResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// Entanglement in ebits of the two-mode squeezed vacuum with squeezing `r`.
#[no_mangle]
pub extern "C" fn ge_entanglement_of_squeezing(r: f64) -> f64 {
    entanglement_of_squeezing(r).ebits()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length plus one, or 0 if
/// there is no error.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ge_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes_with_nul();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len);
                std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n - 1) = 0;
            }
            bytes.len()
        }
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ge_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
