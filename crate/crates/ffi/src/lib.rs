//! C interface to `siltlab-core`.
//!
//! Every function returns a [`SiltStatus`] and writes results through out
//! pointers. Paths are opaque handles owned by the caller and released with
//! [`silt_path_free`]. On failure a description is available from
//! [`silt_last_error_message`] on the same thread. Panics never cross the
//! boundary; they surface as `SILT_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use siltlab_core::tanaka::{sgn_time_integral, TanakaReport};
use siltlab_core::{
    classical_tanaka_residual, generate_path, local_time_downcrossing,
    local_time_downcrossing_corrected, local_time_kernel, moving_level_curve, sgn, silt_derivative,
    stochastic_integral_v, tanaka_report, BrownianPath, Error, EstimatorMode, Mollifier, RngPolicy,
    TanakaForm,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiltStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    IndexOutOfRange = 3,
    LengthMismatch = 4,
    BufferTooSmall = 5,
    Panic = 6,
    Internal = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiltMode {
    /// Exact pair sums, quadratic in the number of steps.
    Reference = 0,
    /// Binned sums with the default bin width.
    Fast = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiltForm {
    Limit = 0,
    Mollified = 1,
}

/// Opaque simulated path.
pub struct SiltPath {
    inner: BrownianPath,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SiltTanakaReport {
    pub seed: u64,
    pub replicate: u64,
    pub x: f64,
    pub t: f64,
    pub epsilon: f64,
    pub dt: f64,
    pub alpha_prime: f64,
    pub sgn_term: f64,
    pub ito_term: f64,
    pub sgn_integral: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

impl From<TanakaReport> for SiltTanakaReport {
    fn from(r: TanakaReport) -> Self {
        Self {
            seed: r.seed,
            replicate: r.replicate,
            x: r.x,
            t: r.t,
            epsilon: r.epsilon,
            dt: r.dt,
            alpha_prime: r.alpha_prime,
            sgn_term: r.sgn_term,
            ito_term: r.ito_term,
            sgn_integral: r.sgn_integral,
            lhs: r.lhs,
            rhs: r.rhs,
            residual: r.residual,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(SiltStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Parameter { .. } | Error::Config { .. } => SiltStatus::InvalidParameter,
            Error::IndexOutOfRange { .. } => SiltStatus::IndexOutOfRange,
            Error::LengthMismatch { .. } => SiltStatus::LengthMismatch,
            _ => SiltStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SiltStatus::NullPointer, format!("`{what}` is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SiltStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SiltStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(&format!("panic: {msg}"));
            SiltStatus::Panic
        }
    }
}

unsafe fn path_ref<'a>(p: *const SiltPath) -> Result<&'a BrownianPath, Failure> {
    p.as_ref().map(|h| &h.inner).ok_or_else(|| null("path"))
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    out.write(value);
    Ok(())
}

unsafe fn write_path(out: *mut *mut SiltPath, path: BrownianPath) -> Result<(), Failure> {
    write(out, Box::into_raw(Box::new(SiltPath { inner: path })))
}

fn mode(m: SiltMode) -> EstimatorMode {
    match m {
        SiltMode::Reference => EstimatorMode::Reference,
        SiltMode::Fast => EstimatorMode::fast(),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn silt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or an empty string.
/// Valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn silt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Simulates replicate `replicate` of `master_seed` with `n_steps` steps of `dt`.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn silt_path_generate(
    master_seed: u64,
    replicate: u64,
    n_steps: usize,
    dt: f64,
    out: *mut *mut SiltPath,
) -> SiltStatus {
    guard(|| {
        let p = generate_path(RngPolicy::new(master_seed, replicate), n_steps, dt)?;
        write_path(out, p)
    })
}

/// Wraps `len` samples on a grid of step `dt`; `values[0]` must be 0.
///
/// # Safety
/// `values` must point to `len` readable doubles and `out` must be valid
/// for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn silt_path_from_values(
    values: *const f64,
    len: usize,
    dt: f64,
    out: *mut *mut SiltPath,
) -> SiltStatus {
    guard(|| {
        if values.is_null() {
            return Err(null("values"));
        }
        let v = std::slice::from_raw_parts(values, len).to_vec();
        write_path(out, BrownianPath::from_values(v, dt)?)
    })
}

/// Releases a path. Null is ignored.
///
/// # Safety
/// `path` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn silt_path_free(path: *mut SiltPath) {
    if !path.is_null() {
        drop(Box::from_raw(path));
    }
}

/// Number of grid steps; the path holds `n_steps + 1` values.
///
/// # Safety
/// `path` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn silt_path_n_steps(path: *const SiltPath, out: *mut usize) -> SiltStatus {
    guard(|| write(out, path_ref(path)?.n_steps()))
}

/// # Safety
/// `path` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn silt_path_dt(path: *const SiltPath, out: *mut f64) -> SiltStatus {
    guard(|| write(out, path_ref(path)?.dt()))
}

/// Copies the `n_steps + 1` values into `buf`. `len_out` (if not null)
/// receives the required length even when `capacity` is too small.
///
/// # Safety
/// `buf` must be writable for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn silt_path_copy_values(
    path: *const SiltPath,
    buf: *mut f64,
    capacity: usize,
    len_out: *mut usize,
) -> SiltStatus {
    guard(|| {
        let v = path_ref(path)?.values();
        if !len_out.is_null() {
            len_out.write(v.len());
        }
        copy_into(v, buf, capacity)
    })
}

unsafe fn copy_into(v: &[f64], buf: *mut f64, capacity: usize) -> Result<(), Failure> {
    if capacity < v.len() {
        return Err(Failure(
            SiltStatus::BufferTooSmall,
            format!("buffer holds {capacity} values, {} needed", v.len()),
        ));
    }
    if buf.is_null() {
        return Err(null("buf"));
    }
    ptr::copy_nonoverlapping(v.as_ptr(), buf, v.len());
    Ok(())
}

/// The path `u -> B_s - B_{s-u}` on `[0, s]`.
///
/// # Safety
/// `path` must be a live handle and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn silt_path_reverse_from(
    path: *const SiltPath,
    s_index: usize,
    out: *mut *mut SiltPath,
) -> SiltStatus {
    guard(|| write_path(out, path_ref(path)?.reverse_from(s_index)?))
}

/// The mirrored path `-B`.
///
/// # Safety
/// `path` must be a live handle and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn silt_path_reflect(
    path: *const SiltPath,
    out: *mut *mut SiltPath,
) -> SiltStatus {
    guard(|| write_path(out, path_ref(path)?.reflect()))
}

/// `f_eps(x)`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn silt_mollifier_eval(epsilon: f64, x: f64, out: *mut f64) -> SiltStatus {
    guard(|| write(out, Mollifier::new(epsilon)?.eval(x)))
}

/// `f_eps'(x)`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn silt_mollifier_deriv(epsilon: f64, x: f64, out: *mut f64) -> SiltStatus {
    guard(|| write(out, Mollifier::new(epsilon)?.eval_deriv(x)))
}

/// `F_eps(x) = erf(x/eps)/2`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn silt_mollifier_antideriv(
    epsilon: f64,
    x: f64,
    out: *mut f64,
) -> SiltStatus {
    guard(|| write(out, Mollifier::new(epsilon)?.eval_antideriv(x)))
}

/// Sign with `sgn(0) = 0`.
#[no_mangle]
pub extern "C" fn silt_sgn(x: f64) -> f64 {
    sgn(x)
}

/// Kernel local time `sum_{k<up_to} f_eps(B_k - level) dt`.
///
/// # Safety
/// `path` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn silt_local_time_kernel(
    path: *const SiltPath,
    up_to: usize,
    level: f64,
    epsilon: f64,
    out: *mut f64,
) -> SiltStatus {
    guard(|| {
        let m = Mollifier::new(epsilon)?;
        write(out, local_time_kernel(path_ref(path)?, up_to, level, &m)?)
    })
}

/// Downcrossing local time `2 h D`.
///
/// # Safety
/// `path` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn silt_local_time_downcrossing(
    path: *const SiltPath,
    up_to: usize,
    level: f64,
    half_width: f64,
    out: *mut f64,
) -> SiltStatus {
    guard(|| {
        write(
            out,
            local_time_downcrossing(path_ref(path)?, up_to, level, half_width)?,
        )
    })
}

/// Downcrossing local time normalized by the band width the sampled path
/// effectively sees.
///
/// # Safety
/// `path` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn silt_local_time_downcrossing_corrected(
    path: *const SiltPath,
    up_to: usize,
    level: f64,
    half_width: f64,
    out: *mut f64,
) -> SiltStatus {
    guard(|| {
        let p = path_ref(path)?;
        write(
            out,
            local_time_downcrossing_corrected(p, up_to, level, half_width)?,
        )
    })
}

/// Writes the moving-level curve at `s = 0..=up_to` into `buf`, which must
/// hold `up_to + 1` values.
///
/// # Safety
/// `buf` must be writable for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn silt_moving_level_curve(
    path: *const SiltPath,
    x: f64,
    epsilon: f64,
    up_to: usize,
    mode_: SiltMode,
    buf: *mut f64,
    capacity: usize,
) -> SiltStatus {
    guard(|| {
        let p = path_ref(path)?;
        p.check_index(up_to)?;
        if capacity < up_to + 1 {
            return Err(Failure(
                SiltStatus::BufferTooSmall,
                format!("buffer holds {capacity} values, {} needed", up_to + 1),
            ));
        }
        let m = Mollifier::new(epsilon)?;
        let curve = moving_level_curve(p, x, &m, up_to, mode(mode_))?;
        copy_into(&curve.values, buf, capacity)
    })
}

/// `alpha'_{t,eps}(x)` at `t = t_index dt`.
///
/// # Safety
/// `path` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn silt_silt_derivative(
    path: *const SiltPath,
    x: f64,
    epsilon: f64,
    t_index: usize,
    mode_: SiltMode,
    out: *mut f64,
) -> SiltStatus {
    guard(|| {
        let m = Mollifier::new(epsilon)?;
        write(
            out,
            silt_derivative(path_ref(path)?, x, &m, t_index, mode(mode_))?,
        )
    })
}

/// `V(x, eps, t)`.
///
/// # Safety
/// `path` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn silt_stochastic_integral_v(
    path: *const SiltPath,
    x: f64,
    epsilon: f64,
    t_index: usize,
    mode_: SiltMode,
    out: *mut f64,
) -> SiltStatus {
    guard(|| {
        let m = Mollifier::new(epsilon)?;
        write(
            out,
            stochastic_integral_v(path_ref(path)?, x, &m, t_index, mode(mode_))?,
        )
    })
}

/// `sum_{u<t} sgn(B_t - B_u - x) dt`.
///
/// # Safety
/// `path` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn silt_sgn_time_integral(
    path: *const SiltPath,
    x: f64,
    t_index: usize,
    out: *mut f64,
) -> SiltStatus {
    guard(|| write(out, sgn_time_integral(path_ref(path)?, x, t_index)?))
}

/// All terms of the identity at `(x, t_index dt)`.
///
/// # Safety
/// `path` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn silt_tanaka_report(
    path: *const SiltPath,
    x: f64,
    epsilon: f64,
    t_index: usize,
    mode_: SiltMode,
    form: SiltForm,
    out: *mut SiltTanakaReport,
) -> SiltStatus {
    guard(|| {
        let m = Mollifier::new(epsilon)?;
        let form = match form {
            SiltForm::Limit => TanakaForm::Limit,
            SiltForm::Mollified => TanakaForm::Mollified,
        };
        let r = tanaka_report(path_ref(path)?, x, &m, t_index, mode(mode_), form)?;
        write(out, r.into())
    })
}

/// Residual of the classical Tanaka formula with the kernel local time.
///
/// # Safety
/// `path` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn silt_classical_tanaka_residual(
    path: *const SiltPath,
    x: f64,
    epsilon: f64,
    t_index: usize,
    out: *mut f64,
) -> SiltStatus {
    guard(|| {
        let m = Mollifier::new(epsilon)?;
        write(
            out,
            classical_tanaka_residual(path_ref(path)?, x, &m, t_index)?,
        )
    })
}
