//! C ABI over the `saddle` toolkit.
//!
//! Problems and solve traces are exposed as opaque handles created and freed
//! through this API. Every fallible function returns a [`SaddleStatus`]; on
//! failure a message is kept per thread and can be read with
//! [`saddle_last_error_message`]. Strings returned through `char **` out
//! parameters must be released with [`saddle_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use saddle::admm::IterationTrace;
use saddle::bench::{solve, Method};
use saddle::randgen::{random_problem, sample_beta, GenSpec};
use saddle::spectral::{classify_and_verify, dtilde_extremes};
use saddle::{direct_solve, SaddleError, SaddleProblem};

/// Result codes shared by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaddleStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Parse = 4,
    Io = 5,
    Panic = 6,
}

/// Solver selection for [`saddle_solve`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaddleMethod {
    Admm = 0,
    GmresLeft = 1,
    GmresRight = 2,
}

/// Opaque problem handle.
pub struct SaddleProblemHandle {
    inner: SaddleProblem,
}

/// Opaque handle to the residual history of one solve.
pub struct SaddleTraceHandle {
    inner: IterationTrace,
    solution: Vec<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &SaddleError) -> SaddleStatus {
    match err {
        SaddleError::Io(_) => SaddleStatus::Io,
        SaddleError::Json(_) | SaddleError::Csv(_) => SaddleStatus::Parse,
        e if e.is_numerical() => SaddleStatus::Numerical,
        _ => SaddleStatus::InvalidArgument,
    }
}

fn fail(status: SaddleStatus, msg: impl Into<String>) -> SaddleStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, converting errors and panics into status codes.
fn guarded(f: impl FnOnce() -> Result<(), SaddleStatus>) -> SaddleStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SaddleStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(SaddleStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: saddle::Result<T>) -> Result<T, SaddleStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), SaddleStatus> {
    if p.is_null() {
        Err(fail(SaddleStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

fn out_string(s: String, out: *mut *mut c_char) -> Result<(), SaddleStatus> {
    let c = CString::new(s).map_err(|_| fail(SaddleStatus::Parse, "string contains NUL"))?;
    // SAFETY: caller checked `out` for null.
    unsafe { *out = c.into_raw() };
    Ok(())
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn saddle_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn saddle_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a problem from its JSON representation.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn saddle_problem_from_json(
    json: *const c_char,
    out: *mut *mut SaddleProblemHandle,
) -> SaddleStatus {
    guarded(|| {
        non_null(json, "json")?;
        non_null(out, "out")?;
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| fail(SaddleStatus::Parse, "json is not valid UTF-8"))?;
        let inner = lift(SaddleProblem::from_json(text))?;
        *out = Box::into_raw(Box::new(SaddleProblemHandle { inner }));
        Ok(())
    })
}

/// Generates a random problem with the given dimensions, spread and seed.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn saddle_problem_generate(
    nx: usize,
    ny: usize,
    nz: usize,
    s: f64,
    seed: u64,
    out: *mut *mut SaddleProblemHandle,
) -> SaddleStatus {
    guarded(|| {
        non_null(out, "out")?;
        let inner = lift(random_problem(&GenSpec { nx, ny, nz, s, seed }))?;
        *out = Box::into_raw(Box::new(SaddleProblemHandle { inner }));
        Ok(())
    })
}

/// Serializes a problem to JSON. Free the result with [`saddle_string_free`].
///
/// # Safety
/// `problem` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn saddle_problem_to_json(
    problem: *const SaddleProblemHandle,
    out: *mut *mut c_char,
) -> SaddleStatus {
    guarded(|| {
        non_null(problem, "problem")?;
        non_null(out, "out")?;
        let json = lift((*problem).inner.to_json())?;
        out_string(json, out)
    })
}

/// Writes `nx`, `ny`, `nz` of a problem.
///
/// # Safety
/// `problem` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn saddle_problem_dims(
    problem: *const SaddleProblemHandle,
    nx: *mut usize,
    ny: *mut usize,
    nz: *mut usize,
) -> SaddleStatus {
    guarded(|| {
        non_null(problem, "problem")?;
        non_null(nx, "nx")?;
        non_null(ny, "ny")?;
        non_null(nz, "nz")?;
        let p = &(*problem).inner;
        *nx = p.nx();
        *ny = p.ny();
        *nz = p.nz();
        Ok(())
    })
}

/// Releases a problem handle. Null is ignored.
///
/// # Safety
/// `problem` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn saddle_problem_free(problem: *mut SaddleProblemHandle) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Extreme eigenvalues `m`, `ell` of `(A D⁻¹ Aᵀ)⁻¹` and their ratio.
///
/// # Safety
/// `problem` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn saddle_dtilde_extremes(
    problem: *const SaddleProblemHandle,
    m: *mut f64,
    ell: *mut f64,
    kappa: *mut f64,
) -> SaddleStatus {
    guarded(|| {
        non_null(problem, "problem")?;
        non_null(m, "m")?;
        non_null(ell, "ell")?;
        non_null(kappa, "kappa")?;
        let dt = lift(dtilde_extremes(&(*problem).inner))?;
        *m = dt.m;
        *ell = dt.ell;
        *kappa = dt.kappa;
        Ok(())
    })
}

/// Draws `β = 10^{2Y}`, `Y ~ U[−1, 1]`, from `seed`.
#[no_mangle]
pub extern "C" fn saddle_sample_beta(seed: u64) -> f64 {
    sample_beta(seed)
}

/// Solves the KKT system densely into `out`, stacked as `[x; z; y]`.
///
/// # Safety
/// `problem` must be a live handle; `out` must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn saddle_direct_solve(
    problem: *const SaddleProblemHandle,
    out: *mut f64,
    out_len: usize,
) -> SaddleStatus {
    guarded(|| {
        non_null(problem, "problem")?;
        non_null(out, "out")?;
        let p = &(*problem).inner;
        if out_len != p.dim() {
            return Err(fail(
                SaddleStatus::InvalidArgument,
                format!("out_len must be {}, got {out_len}", p.dim()),
            ));
        }
        let u = lift(direct_solve(p))?.stack();
        std::slice::from_raw_parts_mut(out, out_len).copy_from_slice(u.as_slice());
        Ok(())
    })
}

/// Runs a solver from the zero iterate and returns its trace.
///
/// # Safety
/// `problem` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn saddle_solve(
    problem: *const SaddleProblemHandle,
    method: SaddleMethod,
    beta: f64,
    eps: f64,
    max_iter: usize,
    out: *mut *mut SaddleTraceHandle,
) -> SaddleStatus {
    guarded(|| {
        non_null(problem, "problem")?;
        non_null(out, "out")?;
        let m = match method {
            SaddleMethod::Admm => Method::Admm,
            SaddleMethod::GmresLeft => Method::GmresLeft,
            SaddleMethod::GmresRight => Method::GmresRight,
        };
        let res = lift(solve(&(*problem).inner, m, beta, eps, max_iter))?;
        let solution = res.solution.stack().as_slice().to_vec();
        *out = Box::into_raw(Box::new(SaddleTraceHandle {
            inner: res.trace,
            solution,
        }));
        Ok(())
    })
}

/// Number of iterations taken; 0 for a null handle.
///
/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn saddle_trace_iterations(trace: *const SaddleTraceHandle) -> usize {
    trace.as_ref().map_or(0, |t| t.inner.iterations)
}

/// Whether the run met its tolerance; false for a null handle.
///
/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn saddle_trace_converged(trace: *const SaddleTraceHandle) -> bool {
    trace.as_ref().is_some_and(|t| t.inner.converged)
}

/// Copies up to `len` absolute KKT residuals into `out` and writes the full
/// count (iterations + 1) to `count`.
///
/// # Safety
/// `trace` must be a live handle; `out` must hold `len` doubles (it may be
/// null when `len` is 0); `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn saddle_trace_residuals(
    trace: *const SaddleTraceHandle,
    out: *mut f64,
    len: usize,
    count: *mut usize,
) -> SaddleStatus {
    guarded(|| {
        non_null(trace, "trace")?;
        non_null(count, "count")?;
        let r = &(*trace).inner.residuals;
        *count = r.len();
        if len > 0 {
            non_null(out, "out")?;
            let n = len.min(r.len());
            std::slice::from_raw_parts_mut(out, n).copy_from_slice(&r[..n]);
        }
        Ok(())
    })
}

/// Copies the final iterate `[x; z; y]` into `out`, which must hold exactly
/// `nx + nz + ny` doubles.
///
/// # Safety
/// `trace` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn saddle_trace_solution(
    trace: *const SaddleTraceHandle,
    out: *mut f64,
    len: usize,
) -> SaddleStatus {
    guarded(|| {
        non_null(trace, "trace")?;
        non_null(out, "out")?;
        let s = &(*trace).solution;
        if len != s.len() {
            return Err(fail(
                SaddleStatus::InvalidArgument,
                format!("len must be {}, got {len}", s.len()),
            ));
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(s);
        Ok(())
    })
}

/// Releases a trace handle. Null is ignored.
///
/// # Safety
/// `trace` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn saddle_trace_free(trace: *mut SaddleTraceHandle) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Spectral report at `beta` as JSON. Free with [`saddle_string_free`].
///
/// # Safety
/// `problem` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn saddle_spectrum_json(
    problem: *const SaddleProblemHandle,
    beta: f64,
    out: *mut *mut c_char,
) -> SaddleStatus {
    guarded(|| {
        non_null(problem, "problem")?;
        non_null(out, "out")?;
        let report = lift(classify_and_verify(&(*problem).inner, beta))?;
        let json = serde_json::to_string(&report)
            .map_err(|e| fail(SaddleStatus::Parse, e.to_string()))?;
        out_string(json, out)
    })
}
