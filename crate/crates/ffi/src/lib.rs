//! C ABI over the cascade-pde library.
//!
//! Every fallible function returns a [`CpStatus`]. On failure the message is
//! kept per thread and read back with [`cp_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, UnwindSafe};
use std::ptr;

use cascade_pde::config::{Document, SolveConfig};
use cascade_pde::solver::{HeterogeneitySpec, SolutionField};
use cascade_pde::spectral::{
    min_speed_competition, min_speed_cooperative, min_speed_numeric, min_speed_sir, principal_eigenvalue,
    EigenProblem, Linearization, SpeedMethod, SpeedResult,
};
use cascade_pde::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Validation = 4,
    NoWave = 5,
    NoMinimum = 6,
    Numeric = 7,
    OutOfRange = 8,
    Io = 9,
    Panic = 10,
}

/// Speed summary returned by the speed functions.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CpSpeed {
    pub c_star: f64,
    pub lambda_star: f64,
    /// 1 for a closed form, 0 for the numeric minimum.
    pub closed_form: i32,
}

/// Opaque solution handle.
pub struct CpSolution {
    field: SolutionField,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> CpStatus {
    match err {
        Error::Parse { .. } => CpStatus::Parse,
        Error::Validation(_)
        | Error::Domain { .. }
        | Error::UndefinedDistance
        | Error::NoEquilibrium { .. }
        | Error::NoInvasion { .. }
        | Error::Unsupported(_)
        | Error::Range(_) => CpStatus::Validation,
        Error::NoWave { .. } => CpStatus::NoWave,
        Error::NoMinimum { .. } => CpStatus::NoMinimum,
        Error::Io { .. } => CpStatus::Io,
        _ => CpStatus::Numeric,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (CpStatus, String)> + UnwindSafe) -> CpStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(f) {
        Ok(Ok(())) => CpStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".to_string());
            CpStatus::Panic
        }
    }
}

fn lib_err(err: Error) -> (CpStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(name: &str) -> (CpStatus, String) {
    (CpStatus::NullPointer, format!("`{name}` is null"))
}

fn speed_out(result: SpeedResult) -> CpSpeed {
    CpSpeed {
        c_star: result.c_star,
        lambda_star: result.lambda_star,
        closed_form: i32::from(result.method == SpeedMethod::ClosedForm),
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn cp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// SIR minimal speed `2 sqrt(d2 (beta - gamma))`; `CP_STATUS_NO_WAVE` when `beta <= gamma`.
///
/// # Safety
/// `out` must be null or point to writable memory for one `CpSpeed`.
#[no_mangle]
pub unsafe extern "C" fn cp_speed_sir(d2: f64, beta: f64, gamma: f64, out: *mut CpSpeed) -> CpStatus {
    guard(|| {
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *out = speed_out(min_speed_sir(d2, beta, gamma).map_err(lib_err)?);
        Ok(())
    })
}

/// Invasion speed of species 1 into species 2 at capacity `k2`.
///
/// # Safety
/// `out` must be null or point to writable memory for one `CpSpeed`.
#[no_mangle]
pub unsafe extern "C" fn cp_speed_competition(
    d1: f64,
    r1: f64,
    alpha1: f64,
    k2: f64,
    out: *mut CpSpeed,
) -> CpStatus {
    guard(|| {
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *out = speed_out(min_speed_competition(d1, r1, alpha1, k2).map_err(lib_err)?);
        Ok(())
    })
}

/// Two-source cooperative speed; requires `d1 >= d2` and `r1 >= r2`.
///
/// # Safety
/// `out` must be null or point to writable memory for one `CpSpeed`.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn cp_speed_cooperative(
    d1: f64,
    r1: f64,
    d2: f64,
    r2: f64,
    a1: f64,
    a2: f64,
    k1: f64,
    k2: f64,
    out: *mut CpSpeed,
) -> CpStatus {
    guard(|| {
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *out = speed_out(min_speed_cooperative(d1, r1, d2, r2, a1, a2, k1, k2).map_err(lib_err)?);
        Ok(())
    })
}

/// Numeric minimal speed of a general `n`-component linearization.
/// `jacobian` is row-major `n * n`.
///
/// # Safety
/// `diffusion` must point to `n` doubles, `jacobian` to `n * n` doubles and
/// `out` to writable memory for one `CpSpeed`.
#[no_mangle]
pub unsafe extern "C" fn cp_speed_numeric(
    n: usize,
    diffusion: *const f64,
    jacobian: *const f64,
    out: *mut CpSpeed,
) -> CpStatus {
    guard(|| {
        if diffusion.is_null() {
            return Err(null("diffusion"));
        }
        if jacobian.is_null() {
            return Err(null("jacobian"));
        }
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        let len = n
            .checked_mul(n)
            .ok_or_else(|| (CpStatus::Validation, format!("size {n} overflows")))?;
        let d = unsafe { std::slice::from_raw_parts(diffusion, n) }.to_vec();
        let j = unsafe { std::slice::from_raw_parts(jacobian, len) };
        let rows = j.chunks(n.max(1)).map(<[f64]>::to_vec).collect();
        let lin = Linearization::new(d, rows).map_err(lib_err)?;
        *out = speed_out(min_speed_numeric(&lin).map_err(lib_err)?);
        Ok(())
    })
}

/// Principal eigenvalue of `-(a u')' = mu u` on `[l, upper]` with
/// `a(x) = d e^(-b x)`, Neumann at `l` and Robin coefficient `alpha_r` at `upper`.
///
/// # Safety
/// `mu` must point to writable memory for one double.
#[no_mangle]
pub unsafe extern "C" fn cp_principal_eigenvalue(
    d: f64,
    b: f64,
    alpha_r: f64,
    l: f64,
    upper: f64,
    nx: usize,
    mu: *mut f64,
) -> CpStatus {
    guard(|| {
        let mu = unsafe { mu.as_mut() }.ok_or_else(|| null("mu"))?;
        let problem = EigenProblem {
            d,
            b,
            heterogeneity: HeterogeneitySpec::Constant,
            alpha_r,
            l,
            upper,
            nx,
        };
        *mu = principal_eigenvalue(&problem).map_err(lib_err)?.mu;
        Ok(())
    })
}

/// Solve the model described by a TOML document in the `solve` config format.
/// On success `*out` owns a handle released with [`cp_solution_free`].
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` must point to writable
/// memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn cp_solve_toml(toml: *const c_char, out: *mut *mut CpSolution) -> CpStatus {
    guard(|| {
        if toml.is_null() {
            return Err(null("toml"));
        }
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *out = ptr::null_mut();
        let text = unsafe { CStr::from_ptr(toml) }
            .to_str()
            .map_err(|e| (CpStatus::InvalidUtf8, e.to_string()))?;
        let config: SolveConfig = Document::parse(text, "<toml>")
            .and_then(|doc| doc.bind())
            .map_err(lib_err)?;
        let field = config.solve().map_err(lib_err)?;
        *out = Box::into_raw(Box::new(CpSolution { field }));
        Ok(())
    })
}

/// Release a solution handle. Null is ignored.
///
/// # Safety
/// `handle` must be null or come from [`cp_solve_toml`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cp_solution_free(handle: *mut CpSolution) {
    if !handle.is_null() {
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// Number of spatial nodes, or 0 for a null handle.
///
/// # Safety
/// `handle` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cp_solution_node_count(handle: *const CpSolution) -> usize {
    unsafe { handle.as_ref() }.map_or(0, |h| h.field.xs().len())
}

/// Number of stored time levels, or 0 for a null handle.
///
/// # Safety
/// `handle` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cp_solution_time_count(handle: *const CpSolution) -> usize {
    unsafe { handle.as_ref() }.map_or(0, |h| h.field.times().len())
}

/// Number of components, or 0 for a null handle.
///
/// # Safety
/// `handle` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cp_solution_component_count(handle: *const CpSolution) -> usize {
    unsafe { handle.as_ref() }.map_or(0, |h| h.field.component_count())
}

fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), (CpStatus, String)> {
    if buf.is_null() {
        return Err(null("buf"));
    }
    if len < src.len() {
        return Err((CpStatus::OutOfRange, format!("buffer holds {len}, need {}", src.len())));
    }
    unsafe { ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len()) };
    Ok(())
}

/// Copy the node coordinates into `buf`, which holds `len` doubles.
///
/// # Safety
/// `handle` must be a live handle and `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cp_solution_xs(handle: *const CpSolution, buf: *mut f64, len: usize) -> CpStatus {
    guard(|| {
        let h = unsafe { handle.as_ref() }.ok_or_else(|| null("handle"))?;
        copy_out(h.field.xs(), buf, len)
    })
}

/// Copy the stored times into `buf`, which holds `len` doubles.
///
/// # Safety
/// `handle` must be a live handle and `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cp_solution_times(handle: *const CpSolution, buf: *mut f64, len: usize) -> CpStatus {
    guard(|| {
        let h = unsafe { handle.as_ref() }.ok_or_else(|| null("handle"))?;
        copy_out(h.field.times(), buf, len)
    })
}

/// Copy component `c` at time level `k` into `buf`, which holds `len` doubles.
///
/// # Safety
/// `handle` must be a live handle and `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cp_solution_snapshot(
    handle: *const CpSolution,
    c: usize,
    k: usize,
    buf: *mut f64,
    len: usize,
) -> CpStatus {
    guard(|| {
        let h = unsafe { handle.as_ref() }.ok_or_else(|| null("handle"))?;
        let f = &h.field;
        if c >= f.component_count() || k >= f.times().len() {
            return Err((
                CpStatus::OutOfRange,
                format!("component {c} / time level {k} out of range"),
            ));
        }
        copy_out(f.snapshot(c, k), buf, len)
    })
}
