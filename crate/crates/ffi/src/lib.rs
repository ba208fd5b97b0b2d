//! C ABI over the core library.
//!
//! Objects cross the boundary as opaque handles. Every call returns an
//! [`RgStatus`]; on failure the message is available from
//! [`rg_last_error`] until the next failing call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use relaxed_gabor::expansion::{relaxed_coefficients, RelaxedExpansion};
use relaxed_gabor::gabor::atom;
use relaxed_gabor::metaplectic::{metaplectic_apply, Rotation};
use relaxed_gabor::numerics::{hermite_signal, loc_integral, theta, Grid, SampledSignal, ThetaConfig};
use relaxed_gabor::phaseplane::PhasePoint;
use relaxed_gabor::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Panic = 4,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RgComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for RgComplex {
    fn from(c: Complex64) -> Self {
        RgComplex { re: c.re, im: c.im }
    }
}

/// Sampled signal on a uniform grid.
pub struct RgSignal(SampledSignal);

/// Relaxed expansion of a signal.
pub struct RgExpansion(RelaxedExpansion);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RgStatus {
    match e {
        Error::ThetaDivision(..) | Error::SupportOverflow(_) | Error::ZeroCoefficients => RgStatus::Numerical,
        _ => RgStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), RgStatus>) -> RgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RgStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside relaxed-gabor".into());
            RgStatus::Panic
        }
    }
}

fn check<T>(r: relaxed_gabor::Result<T>) -> Result<T, RgStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), RgStatus> {
    if p.is_null() {
        set_error(format!("{what} is null"));
        return Err(RgStatus::NullPointer);
    }
    Ok(())
}

fn make_grid(half_width: f64, step: f64) -> Result<Grid, RgStatus> {
    check(Grid::new(half_width, step))
}

unsafe fn put<T>(out: *mut *mut T, v: T) {
    *out = Box::into_raw(Box::new(v));
}

/// Message of the last failing call on this thread, or null.
#[no_mangle]
pub extern "C" fn rg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Copies `len` samples into a new signal on the grid `[-half_width, half_width]`, step `step`.
///
/// # Safety
/// `values` must point to `len` readable elements and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rg_signal_new(
    half_width: f64,
    step: f64,
    values: *const RgComplex,
    len: usize,
    out: *mut *mut RgSignal,
) -> RgStatus {
    guard(|| {
        non_null(values, "values")?;
        non_null(out, "out")?;
        let grid = make_grid(half_width, step)?;
        let v = std::slice::from_raw_parts(values, len).iter().map(|c| Complex64::new(c.re, c.im)).collect();
        let s = check(SampledSignal::from_values(grid, v))?;
        put(out, RgSignal(s));
        Ok(())
    })
}

/// # Safety
/// `sig` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rg_signal_free(sig: *mut RgSignal) {
    if !sig.is_null() {
        drop(Box::from_raw(sig));
    }
}

/// Number of samples, 0 for a null handle.
///
/// # Safety
/// `sig` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rg_signal_len(sig: *const RgSignal) -> usize {
    sig.as_ref().map_or(0, |s| s.0.len())
}

/// Copies the samples into `out`, which must hold `len == rg_signal_len(sig)` elements.
///
/// # Safety
/// `sig` must be a live handle and `out` must point to `len` writable elements.
#[no_mangle]
pub unsafe extern "C" fn rg_signal_values(sig: *const RgSignal, out: *mut RgComplex, len: usize) -> RgStatus {
    guard(|| {
        non_null(sig, "sig")?;
        non_null(out, "out")?;
        let s = &(*sig).0;
        if len != s.len() {
            set_error(format!("buffer holds {len} samples, signal has {}", s.len()));
            return Err(RgStatus::InvalidArgument);
        }
        let dst = std::slice::from_raw_parts_mut(out, len);
        for (d, v) in dst.iter_mut().zip(s.values()) {
            *d = (*v).into();
        }
        Ok(())
    })
}

/// Normalized Hermite function `h_n`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rg_hermite(n: usize, half_width: f64, step: f64, out: *mut *mut RgSignal) -> RgStatus {
    guard(|| {
        non_null(out, "out")?;
        let grid = make_grid(half_width, step)?;
        put(out, RgSignal(hermite_signal(n, grid)));
        Ok(())
    })
}

/// Coherent state `e_λ` at `λ = (p, theta)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rg_atom(p: f64, theta: f64, half_width: f64, step: f64, out: *mut *mut RgSignal) -> RgStatus {
    guard(|| {
        non_null(out, "out")?;
        let grid = make_grid(half_width, step)?;
        put(out, RgSignal(check(atom(PhasePoint::new(p, theta), grid))?));
        Ok(())
    })
}

/// Relaxed expansion with lattice cutoff `|k|, |j| <= cutoff`.
///
/// # Safety
/// `sig` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rg_expansion_new(sig: *const RgSignal, cutoff: usize, out: *mut *mut RgExpansion) -> RgStatus {
    guard(|| {
        non_null(sig, "sig")?;
        non_null(out, "out")?;
        put(out, RgExpansion(check(relaxed_coefficients(&(*sig).0, cutoff))?));
        Ok(())
    })
}

/// # Safety
/// `exp` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rg_expansion_free(exp: *mut RgExpansion) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}

/// Coefficient of the sharp atom.
///
/// # Safety
/// `exp` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rg_expansion_sharp(exp: *const RgExpansion, out: *mut RgComplex) -> RgStatus {
    guard(|| {
        non_null(exp, "exp")?;
        non_null(out, "out")?;
        *out = (*exp).0.sharp.into();
        Ok(())
    })
}

/// Lattice coefficient at `(k, j)`; zero outside the cutoff.
///
/// # Safety
/// `exp` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rg_expansion_lattice(exp: *const RgExpansion, k: i64, j: i64, out: *mut RgComplex) -> RgStatus {
    guard(|| {
        non_null(exp, "exp")?;
        non_null(out, "out")?;
        *out = (*exp).0.lattice(k, j).into();
        Ok(())
    })
}

/// Reconstruction from the expansion on the source signal's grid.
///
/// # Safety
/// `exp` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rg_expansion_synthesize(
    exp: *const RgExpansion,
    half_width: f64,
    step: f64,
    out: *mut *mut RgSignal,
) -> RgStatus {
    guard(|| {
        non_null(exp, "exp")?;
        non_null(out, "out")?;
        let grid = make_grid(half_width, step)?;
        put(out, RgSignal(check((*exp).0.synthesize(grid))?));
        Ok(())
    })
}

/// `Θ(z)` truncated to `|q| <= terms`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rg_theta(re: f64, im: f64, terms: u32, out: *mut RgComplex) -> RgStatus {
    guard(|| {
        non_null(out, "out")?;
        if terms < 1 {
            set_error("terms must be at least 1".into());
            return Err(RgStatus::InvalidArgument);
        }
        *out = theta(Complex64::new(re, im), ThetaConfig::new(terms)).into();
        Ok(())
    })
}

/// Localization integral `I(x)`.
#[no_mangle]
pub extern "C" fn rg_loc_integral(x: f64) -> f64 {
    loc_integral(x)
}

/// Metaplectic rotation by `angle`.
///
/// # Safety
/// `sig` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rg_metaplectic_apply(sig: *const RgSignal, angle: f64, out: *mut *mut RgSignal) -> RgStatus {
    guard(|| {
        non_null(sig, "sig")?;
        non_null(out, "out")?;
        if !angle.is_finite() {
            set_error(format!("angle {angle} is not finite"));
            return Err(RgStatus::InvalidArgument);
        }
        put(out, RgSignal(metaplectic_apply(Rotation::new(angle), &(*sig).0)));
        Ok(())
    })
}
