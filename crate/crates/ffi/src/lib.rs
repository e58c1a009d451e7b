//! C ABI for `nodal-lab`.
//!
//! Every function returns an [`NlStatus`] and writes results through out
//! pointers. Eigenfunctions are opaque [`NlEigenfunction`] handles released
//! with [`nl_eigen_free`]. The message of the last failure on the calling
//! thread is available from [`nl_last_error`].

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use nodal_lab::cascade::lln_tail;
use nodal_lab::doubling::{doubling_index, DoublingParams};
use nodal_lab::eigen::{lift, TorusMode};
use nodal_lab::nodal::{extract_nodal_2d, extract_nodal_3d, min_resolution_2d, min_resolution_3d, NodalOptions, Region2};
use nodal_lab::{CubeSpec, Eigenfunction, Error, ManifoldId};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotAnEigenvalue = 3,
    ChartEscape = 4,
    Numerical = 5,
    Resolution = 6,
    Precondition = 7,
    EmptyNodalSet = 8,
    Unsupported = 9,
    Io = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NlManifold {
    Torus2 = 0,
    Sphere2 = 1,
    Torus3 = 2,
}

impl From<NlManifold> for ManifoldId {
    fn from(m: NlManifold) -> Self {
        match m {
            NlManifold::Torus2 => ManifoldId::Torus2,
            NlManifold::Sphere2 => ManifoldId::Sphere2,
            NlManifold::Torus3 => ManifoldId::Torus3,
        }
    }
}

/// Opaque eigenfunction handle.
pub struct NlEigenfunction {
    inner: Eigenfunction,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> NlStatus {
    match e {
        Error::InvalidArgument(_) | Error::Config(_) => NlStatus::InvalidArgument,
        Error::NotAnEigenvalue { .. } => NlStatus::NotAnEigenvalue,
        Error::ChartEscape(_) => NlStatus::ChartEscape,
        Error::NonFinite { .. } | Error::MassUnderflow { .. } | Error::DegenerateFit(_) => NlStatus::Numerical,
        Error::ResolutionTooLow { .. } | Error::ResolutionTooHigh { .. } => NlStatus::Resolution,
        Error::Precondition(_) => NlStatus::Precondition,
        Error::EmptyNodalSet => NlStatus::EmptyNodalSet,
        Error::Unsupported(_) => NlStatus::Unsupported,
        Error::Io(_) => NlStatus::Io,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> NlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NlStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            NlStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            NlStatus::Panic
        }
    }
}

unsafe fn handle<'a>(h: *const NlEigenfunction) -> Result<&'a Eigenfunction, Fail> {
    // SAFETY: the caller passes null or a live handle from this library.
    unsafe { h.as_ref() }.map(|h| &h.inner).ok_or(Fail::Null("handle"))
}

unsafe fn input<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    // SAFETY: the caller guarantees `len` readable elements at `p`.
    Ok(unsafe { slice::from_raw_parts(p, len) })
}

unsafe fn write<T>(out: *mut T, v: T, what: &'static str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(what));
    }
    // SAFETY: non-null, and the caller guarantees it is writable.
    unsafe { out.write(v) };
    Ok(())
}

fn point_of(u: &Eigenfunction, p: &[f64]) -> Result<(), Fail> {
    if p.len() != u.dim() {
        return Err(Error::InvalidArgument(format!("point has {} coordinates, expected {}", p.len(), u.dim())).into());
    }
    Ok(())
}

unsafe fn emit(u: Eigenfunction, out: *mut *mut NlEigenfunction) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("out"));
    }
    let h = Box::into_raw(Box::new(NlEigenfunction { inner: u }));
    // SAFETY: checked non-null above.
    unsafe { out.write(h) };
    Ok(())
}

/// Random unit-norm eigenfunction with eigenvalue `lambda`, reproducible from `seed`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nl_eigen_synth_random(
    manifold: NlManifold,
    lambda: u64,
    seed: u64,
    out: *mut *mut NlEigenfunction,
) -> NlStatus {
    guard(|| unsafe { emit(Eigenfunction::synth_random(manifold.into(), lambda, seed)?, out) })
}

/// `Σ cos_coef[i]·cos⟨k_i,x⟩ + sin_coef[i]·sin⟨k_i,x⟩` on a flat torus.
/// `k` holds `count` frequency vectors of the manifold's dimension, row-major;
/// all must share the same `|k|²`.
///
/// # Safety
/// `k` must hold `count·dim` values, `cos_coef` and `sin_coef` `count` values each;
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nl_eigen_from_torus_modes(
    manifold: NlManifold,
    k: *const i64,
    cos_coef: *const f64,
    sin_coef: *const f64,
    count: usize,
    out: *mut *mut NlEigenfunction,
) -> NlStatus {
    guard(|| {
        let m: ManifoldId = manifold.into();
        let d = m.dim();
        let k = unsafe { input(k, count * d, "k")? };
        let c = unsafe { input(cos_coef, count, "cos_coef")? };
        let s = unsafe { input(sin_coef, count, "sin_coef")? };
        let modes = (0..count)
            .map(|i| TorusMode { k: k[i * d..(i + 1) * d].to_vec(), cos_coef: c[i], sin_coef: s[i] })
            .collect();
        unsafe { emit(Eigenfunction::from_torus_modes(m, modes)?, out) }
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `h` must be null or a handle from this library that was not freed yet.
#[no_mangle]
pub unsafe extern "C" fn nl_eigen_free(h: *mut NlEigenfunction) {
    if !h.is_null() {
        // SAFETY: the handle was created by `Box::into_raw` in `emit`.
        drop(unsafe { Box::from_raw(h) });
    }
}

/// # Safety
/// `h` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nl_eigen_lambda(h: *const NlEigenfunction, out: *mut u64) -> NlStatus {
    guard(|| unsafe { write(out, handle(h)?.lambda(), "out") })
}

/// Coordinates per point: 2 on Torus2 and on the sphere's northern cap chart, 3 on Torus3.
///
/// # Safety
/// `h` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nl_eigen_dim(h: *const NlEigenfunction, out: *mut usize) -> NlStatus {
    guard(|| unsafe { write(out, handle(h)?.dim(), "out") })
}

/// Value at `point`, in the default chart of the manifold.
///
/// # Safety
/// `h` must be a live handle, `point` must hold `len` values and `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nl_eigen_evaluate(
    h: *const NlEigenfunction,
    point: *const f64,
    len: usize,
    out: *mut f64,
) -> NlStatus {
    guard(|| {
        let u = unsafe { handle(h)? };
        let p = unsafe { input(point, len, "point")? };
        point_of(u, p)?;
        unsafe { write(out, u.evaluate(p), "out") }
    })
}

/// Chart gradient at `point`, written to `out[0..len]`.
///
/// # Safety
/// `h` must be a live handle; `point` and `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn nl_eigen_gradient(
    h: *const NlEigenfunction,
    point: *const f64,
    len: usize,
    out: *mut f64,
) -> NlStatus {
    guard(|| {
        let u = unsafe { handle(h)? };
        let p = unsafe { input(point, len, "point")? };
        point_of(u, p)?;
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let g = u.gradient(p);
        // SAFETY: the caller guarantees `len` writable values.
        unsafe { ptr::copy_nonoverlapping(g.as_ptr(), out, len) };
        Ok(())
    })
}

/// Doubling index `N` with `l = 5` on the cube `(center, half_side)`. With
/// `lifted`, the index is that of `u(x)·e^{√λ t}` and `center` carries `t` last.
///
/// # Safety
/// `h` must be a live handle, `center` must hold `len` values and `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nl_doubling_index(
    h: *const NlEigenfunction,
    center: *const f64,
    len: usize,
    half_side: f64,
    lifted: bool,
    out: *mut f64,
) -> NlStatus {
    guard(|| {
        let u = unsafe { handle(h)? };
        let c = unsafe { input(center, len, "center")? };
        let q = CubeSpec::new(c.to_vec(), half_side)?;
        let p = DoublingParams::default();
        let n = if lifted { doubling_index(&lift(u)?, &q, &p)? } else { doubling_index(u, &q, &p)? };
        unsafe { write(out, n.index, "out") }
    })
}

/// Length (2D) or area (3D) of the whole nodal set. `resolution = 0` picks
/// the smallest admissible grid.
///
/// # Safety
/// `h` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nl_nodal_measure(h: *const NlEigenfunction, resolution: usize, out: *mut f64) -> NlStatus {
    guard(|| {
        let u = unsafe { handle(h)? };
        let opts = NodalOptions::default();
        let m = match u.manifold() {
            ManifoldId::Torus3 => {
                extract_nodal_3d(u, if resolution == 0 { min_resolution_3d(u) } else { resolution }, &opts)?
            }
            m => {
                let region = if m == ManifoldId::Sphere2 { Region2::Sphere } else { Region2::Torus };
                extract_nodal_2d(u, &region, if resolution == 0 { min_resolution_2d(u) } else { resolution }, &opts)?
            }
        };
        unsafe { write(out, m.total_measure, "out") }
    })
}

/// `P(Bin(j, 1/Y) ≥ j/(2Y))`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nl_lln_tail(j: u32, y: u64, out: *mut f64) -> NlStatus {
    guard(|| {
        if j < 1 || y < 2 {
            return Err(Error::InvalidArgument("need j ≥ 1 and Y ≥ 2".into()).into());
        }
        unsafe { write(out, lln_tail(j, y), "out") }
    })
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `cap`) and returns its full length in bytes.
///
/// # Safety
/// `buf` must be null or hold `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn nl_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = e.len().min(cap - 1);
            // SAFETY: `n + 1 ≤ cap` bytes are writable.
            unsafe {
                ptr::copy_nonoverlapping(e.as_ptr().cast::<c_char>(), buf, n);
                buf.add(n).write(0);
            }
        }
        e.len()
    })
}
