//! C ABI over the `mohardy` core.
//!
//! Objects cross the boundary as opaque handles (`MohardyPhi`,
//! `MohardyFunction`, `MohardyMartingale`) that the caller releases with the
//! matching `*_free` function. Every fallible call returns a
//! [`MohardyStatus`]; the message of the most recent failure on the calling
//! thread is available through [`mohardy_last_error`]. Panics are caught at
//! the boundary and reported as [`MohardyStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mohardy::grid::martingale_of;
use mohardy::harness::{verify, ExperimentConfig};
use mohardy::operators::hardy_norms;
use mohardy::walsh::{analyze, fejer_mean, maximal_fejer, partial_sum};
use mohardy::{
    builtin, luxemburg_norm, modular, DyadicMartingale, Error, MusielakFunction, SampledFunction,
};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MohardyStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Invalid argument, shape or value.
    InvalidArgument = 2,
    /// Malformed φ-spec or input text.
    Parse = 3,
    /// A numerical routine failed (non-convergence, non-finite φ, ...).
    Numerical = 4,
    /// Hypothesis checks rejected a strict-mode campaign.
    Hypothesis = 5,
    /// File or serialisation error.
    Io = 6,
    /// The output buffer is too small; the required length was written.
    BufferTooSmall = 7,
    /// A panic was caught at the boundary.
    Panic = 8,
}

/// Opaque Musielak-Orlicz function.
pub struct MohardyPhi(MusielakFunction);

/// Opaque leaf-sampled function on a dyadic grid.
pub struct MohardyFunction(SampledFunction);

/// Opaque dyadic martingale.
pub struct MohardyMartingale(DyadicMartingale);

/// Norms of one martingale in the five Hardy-type spaces.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MohardyHardyNorms {
    /// `‖M f‖_φ`.
    pub h_max: f64,
    /// `‖S f‖_φ`.
    pub h_square: f64,
    /// `‖s f‖_φ`.
    pub h_cond: f64,
    /// `P_φ` quasi-norm.
    pub p: f64,
    /// `Q_φ` quasi-norm.
    pub q: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> MohardyStatus {
    match e {
        Error::Parse { .. } | Error::UnknownLaw(_) | Error::UnknownInequality(_) => {
            MohardyStatus::Parse
        }
        Error::NonConvergence { .. }
        | Error::NonFinitePhi { .. }
        | Error::BoundaryAttained { .. }
        | Error::ComplementaryUnavailable(_)
        | Error::AInfinityFails { .. }
        | Error::AtomValidation { .. }
        | Error::Reconstruction { .. } => MohardyStatus::Numerical,
        Error::Hypothesis(_) => MohardyStatus::Hypothesis,
        Error::Io(_) | Error::Json(_) | Error::Csv(_) => MohardyStatus::Io,
        _ => MohardyStatus::InvalidArgument,
    }
}

fn guard(body: impl FnOnce() -> Result<(), (MohardyStatus, String)>) -> MohardyStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => MohardyStatus::Ok,
        Ok(Err((status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("panic caught at the C boundary".into());
            MohardyStatus::Panic
        }
    }
}

fn lift<T>(r: mohardy::Result<T>) -> Result<T, (MohardyStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (MohardyStatus, String) {
    (MohardyStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, (MohardyStatus, String)> {
    // SAFETY: the caller guarantees `p` is null or a live handle from this library.
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (MohardyStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: non-null and nul-terminated per the caller contract.
    unsafe { CStr::from_ptr(p) }.to_str().map_err(|_| {
        (
            MohardyStatus::InvalidArgument,
            format!("`{what}` is not UTF-8"),
        )
    })
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), (MohardyStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    // SAFETY: non-null, writable per the caller contract.
    unsafe { out.write(value) };
    Ok(())
}

unsafe fn copy_out(
    values: &[f64],
    out: *mut f64,
    capacity: usize,
    required: *mut usize,
) -> Result<(), (MohardyStatus, String)> {
    if !required.is_null() {
        // SAFETY: non-null, writable per the caller contract.
        unsafe { required.write(values.len()) };
    }
    if capacity < values.len() {
        return Err((
            MohardyStatus::BufferTooSmall,
            format!("buffer holds {capacity} values, {} required", values.len()),
        ));
    }
    if out.is_null() {
        return Err(null("out"));
    }
    // SAFETY: `out` has room for `capacity >= values.len()` doubles.
    unsafe { ptr::copy_nonoverlapping(values.as_ptr(), out, values.len()) };
    Ok(())
}

/// Copies the message of the last failure on this thread into `buf` (nul-terminated,
/// truncated to `capacity`) and returns its full length in bytes, or 0 when there is none.
///
/// # Safety
/// `buf` must be null or point to `capacity` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn mohardy_last_error(buf: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && capacity > 0 {
                let n = bytes.len().min(capacity - 1);
                // SAFETY: `buf` has `capacity > n` writable bytes.
                unsafe {
                    ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                    buf.add(n).write(0);
                }
            }
            bytes.len()
        }
    })
}

/// Parses a φ-spec such as `power:p=2` into a new handle.
///
/// # Safety
/// `spec` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mohardy_phi_parse(
    spec: *const c_char,
    out: *mut *mut MohardyPhi,
) -> MohardyStatus {
    guard(|| {
        let spec = unsafe { c_str(spec, "spec") }?;
        let phi = lift(builtin(spec))?;
        unsafe { put(out, Box::into_raw(Box::new(MohardyPhi(phi))), "out") }
    })
}

/// Evaluates `φ(x, t)`.
///
/// # Safety
/// `phi` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mohardy_phi_eval(
    phi: *const MohardyPhi,
    x: f64,
    t: f64,
    out: *mut f64,
) -> MohardyStatus {
    guard(|| {
        let phi = unsafe { borrow(phi, "phi") }?;
        unsafe { put(out, phi.0.eval(x, t), "out") }
    })
}

/// Releases a φ handle; null is ignored.
///
/// # Safety
/// `phi` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mohardy_phi_free(phi: *mut MohardyPhi) {
    if !phi.is_null() {
        // SAFETY: produced by `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(phi) });
    }
}

/// Creates a function from `len` leaf values; `len` must be a power of two.
///
/// # Safety
/// `values` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mohardy_function_new(
    values: *const f64,
    len: usize,
    out: *mut *mut MohardyFunction,
) -> MohardyStatus {
    guard(|| {
        if values.is_null() {
            return Err(null("values"));
        }
        // SAFETY: `values` has `len` readable doubles per the caller contract.
        let v = unsafe { std::slice::from_raw_parts(values, len) }.to_vec();
        let f = lift(SampledFunction::from_values(v))?;
        unsafe { put(out, Box::into_raw(Box::new(MohardyFunction(f))), "out") }
    })
}

/// Number of leaves of a function.
///
/// # Safety
/// `f` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mohardy_function_len(
    f: *const MohardyFunction,
    out: *mut usize,
) -> MohardyStatus {
    guard(|| {
        let f = unsafe { borrow(f, "f") }?;
        unsafe { put(out, f.0.len(), "out") }
    })
}

/// Copies the leaf values into `out`; `required` (optional) receives the length.
///
/// # Safety
/// `f` must be a live handle; `out` must hold `capacity` doubles; `required` may be null.
#[no_mangle]
pub unsafe extern "C" fn mohardy_function_values(
    f: *const MohardyFunction,
    out: *mut f64,
    capacity: usize,
    required: *mut usize,
) -> MohardyStatus {
    guard(|| {
        let f = unsafe { borrow(f, "f") }?;
        unsafe { copy_out(f.0.values(), out, capacity, required) }
    })
}

/// Releases a function handle; null is ignored.
///
/// # Safety
/// `f` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mohardy_function_free(f: *mut MohardyFunction) {
    if !f.is_null() {
        // SAFETY: produced by `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(f) });
    }
}

/// The modular `∫ φ(x, |f(x)|) dx`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mohardy_modular(
    phi: *const MohardyPhi,
    f: *const MohardyFunction,
    out: *mut f64,
) -> MohardyStatus {
    guard(|| {
        let (phi, f) = unsafe { (borrow(phi, "phi")?, borrow(f, "f")?) };
        let v = lift(modular(&phi.0, &f.0))?;
        unsafe { put(out, v, "out") }
    })
}

/// The Luxemburg norm `‖f‖_φ`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mohardy_luxemburg_norm(
    phi: *const MohardyPhi,
    f: *const MohardyFunction,
    out: *mut f64,
) -> MohardyStatus {
    guard(|| {
        let (phi, f) = unsafe { (borrow(phi, "phi")?, borrow(f, "f")?) };
        let v = lift(luxemburg_norm(&phi.0, &f.0))?;
        unsafe { put(out, v, "out") }
    })
}

/// The martingale `f_n = E_n f` (minus `E f` when `center` is nonzero).
///
/// # Safety
/// `f` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mohardy_martingale_of(
    f: *const MohardyFunction,
    center: bool,
    out: *mut *mut MohardyMartingale,
) -> MohardyStatus {
    guard(|| {
        let f = unsafe { borrow(f, "f") }?;
        let m = martingale_of(&f.0, center);
        unsafe { put(out, Box::into_raw(Box::new(MohardyMartingale(m))), "out") }
    })
}

/// Grid resolution `N` of a martingale.
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mohardy_martingale_resolution(
    m: *const MohardyMartingale,
    out: *mut u32,
) -> MohardyStatus {
    guard(|| {
        let m = unsafe { borrow(m, "m") }?;
        unsafe { put(out, m.0.resolution(), "out") }
    })
}

/// Copies level `n` of a martingale into `out`.
///
/// # Safety
/// `m` must be a live handle; `out` must hold `capacity` doubles; `required` may be null.
#[no_mangle]
pub unsafe extern "C" fn mohardy_martingale_level(
    m: *const MohardyMartingale,
    n: u32,
    out: *mut f64,
    capacity: usize,
    required: *mut usize,
) -> MohardyStatus {
    guard(|| {
        let m = unsafe { borrow(m, "m") }?;
        lift(m.0.grid().check_level(n))?;
        unsafe { copy_out(m.0.level(n).values(), out, capacity, required) }
    })
}

/// Releases a martingale handle; null is ignored.
///
/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mohardy_martingale_free(m: *mut MohardyMartingale) {
    if !m.is_null() {
        // SAFETY: produced by `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(m) });
    }
}

/// The five Hardy-type norms of a martingale.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mohardy_hardy_norms(
    m: *const MohardyMartingale,
    phi: *const MohardyPhi,
    out: *mut MohardyHardyNorms,
) -> MohardyStatus {
    guard(|| {
        let (m, phi) = unsafe { (borrow(m, "m")?, borrow(phi, "phi")?) };
        let r = lift(hardy_norms(&m.0, &phi.0))?;
        let norms = MohardyHardyNorms {
            h_max: r.h_max,
            h_square: r.h_square,
            h_cond: r.h_cond,
            p: r.p,
            q: r.q,
        };
        unsafe { put(out, norms, "out") }
    })
}

/// Paley-ordered Walsh coefficients of `f`.
///
/// # Safety
/// `f` must be a live handle; `out` must hold `capacity` doubles; `required` may be null.
#[no_mangle]
pub unsafe extern "C" fn mohardy_walsh_analyze(
    f: *const MohardyFunction,
    out: *mut f64,
    capacity: usize,
    required: *mut usize,
) -> MohardyStatus {
    guard(|| {
        let f = unsafe { borrow(f, "f") }?;
        unsafe { copy_out(analyze(&f.0).coeffs(), out, capacity, required) }
    })
}

/// Which Walsh-Fourier operator [`mohardy_walsh_apply`] evaluates.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MohardyWalshOp {
    /// Partial sum `s_n f`.
    PartialSum = 0,
    /// Fejér mean `σ_n f` (`n >= 1`).
    FejerMean = 1,
    /// Maximal Fejér operator `σ_* f` (`n` ignored).
    MaximalFejer = 2,
}

/// Applies a Walsh-Fourier operator of order `n` to `f`, returning a new handle.
///
/// # Safety
/// `f` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mohardy_walsh_apply(
    f: *const MohardyFunction,
    op: MohardyWalshOp,
    n: usize,
    out: *mut *mut MohardyFunction,
) -> MohardyStatus {
    guard(|| {
        let f = unsafe { borrow(f, "f") }?;
        let g = match op {
            MohardyWalshOp::PartialSum => partial_sum(&f.0, n),
            MohardyWalshOp::FejerMean => lift(fejer_mean(&f.0, n))?,
            MohardyWalshOp::MaximalFejer => maximal_fejer(&f.0),
        };
        unsafe { put(out, Box::into_raw(Box::new(MohardyFunction(g))), "out") }
    })
}

/// Runs a verification campaign described by a JSON configuration and returns the
/// JSON report as a new string, released with [`mohardy_string_free`].
///
/// The configuration has the fields `inequality`, `phi_spec`, `resolutions`,
/// `trials`, `seed`, `r`, `law`, `exploratory`, `stability` and `ceiling`.
///
/// # Safety
/// `config_json` must be nul-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mohardy_verify_json(
    config_json: *const c_char,
    out: *mut *mut c_char,
) -> MohardyStatus {
    guard(|| {
        let text = unsafe { c_str(config_json, "config_json") }?;
        let config: ExperimentConfig = lift(serde_json::from_str(text).map_err(Error::from))?;
        let report = lift(verify(&config))?;
        let c = CString::new(report.to_json_string()).expect("json has no interior nul");
        unsafe { put(out, c.into_raw(), "out") }
    })
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mohardy_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: produced by `CString::into_raw` in this library.
        drop(unsafe { CString::from_raw(s) });
    }
}
