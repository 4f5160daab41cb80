// SPDX-License-Identifier: Apache-2.0 OR MIT

//! C interface to `cdtw`.
//!
//! Curves and norms are opaque handles created by `cdtw_*_new` style
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`CdtwStatus`]; on failure [`cdtw_last_error`] describes the
//! cause. No function unwinds across the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cdtw::io::{self, NormSpec, ResolvedNorm};
use cdtw::norms::NormHandle;
use cdtw::oracle::{grid_cdtw, GridConfig};
use cdtw::{cdtw_approx, CdtwError, Point2, PolygonalCurve};

/// Outcome of a call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CdtwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidCurve = 3,
    InvalidNorm = 4,
    Numeric = 5,
    MemoryLimit = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// A polygonal curve.
pub struct CdtwCurve(PolygonalCurve);

/// A norm, with its polygonal replacement when it needs one.
pub struct CdtwNorm {
    exact: NormHandle,
    resolved: ResolvedNorm,
}

/// Summary of an approximation.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct CdtwResult {
    /// The approximate distance.
    pub value: f64,
    /// Guaranteed ratio between `value` and the true distance.
    pub factor_bound: f64,
    /// Total pieces over all border functions.
    pub total_pieces: usize,
    /// Largest propagation rank.
    pub max_rank: usize,
    /// Waypoints in the witness path.
    pub witness_len: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &CdtwError) -> CdtwStatus {
    match e {
        CdtwError::Parse { .. } | CdtwError::InvalidCurve(_) => CdtwStatus::InvalidCurve,
        CdtwError::InvalidGauge(_) | CdtwError::NotPolygonal => CdtwStatus::InvalidNorm,
        CdtwError::Numeric(_) => CdtwStatus::Numeric,
        CdtwError::MemoryLimit { .. } => CdtwStatus::MemoryLimit,
        _ => CdtwStatus::InvalidArgument,
    }
}

/// Runs `f`, recording errors and panics.
fn guard(f: impl FnOnce() -> Result<(), (CdtwStatus, String)>) -> CdtwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CdtwStatus::Ok,
        Ok(Err((s, m))) => {
            set_error(m);
            s
        }
        Err(p) => {
            let m = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {m}"));
            CdtwStatus::Panic
        }
    }
}

fn lib_err(e: CdtwError) -> (CdtwStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (CdtwStatus, String) {
    (CdtwStatus::NullPointer, format!("{what} is null"))
}

unsafe fn points(xy: *const f64, count: usize) -> Result<Vec<Point2>, (CdtwStatus, String)> {
    if xy.is_null() {
        return Err(null("coordinate array"));
    }
    // SAFETY: the caller promises `2 * count` readable doubles.
    let raw: &[f64] = unsafe { std::slice::from_raw_parts(xy, 2 * count) };
    Ok(raw.chunks_exact(2).map(|c| Point2::new(c[0], c[1])).collect())
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cdtw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn cdtw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a curve from `count` points stored as `x0, y0, x1, y1, ...`.
///
/// # Safety
/// `xy` must point to `2 * count` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cdtw_curve_new(xy: *const f64, count: usize, out: *mut *mut CdtwCurve) -> CdtwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let pts = unsafe { points(xy, count) }?;
        let c = PolygonalCurve::new(pts).map_err(lib_err)?;
        unsafe { *out = Box::into_raw(Box::new(CdtwCurve(c))) };
        Ok(())
    })
}

/// Number of segments of `curve`, or 0 for null.
///
/// # Safety
/// `curve` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cdtw_curve_segment_count(curve: *const CdtwCurve) -> usize {
    unsafe { curve.as_ref() }.map_or(0, |c| c.0.segment_count())
}

/// Releases a curve. Null is ignored.
///
/// # Safety
/// `curve` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cdtw_curve_free(curve: *mut CdtwCurve) {
    if !curve.is_null() {
        drop(unsafe { Box::from_raw(curve) });
    }
}

fn make_norm(spec: &NormSpec, epsilon: f64) -> Result<CdtwNorm, (CdtwStatus, String)> {
    let eps = (epsilon != 0.0).then_some(epsilon);
    let resolved = io::resolve_norm(spec, eps).map_err(|e| match e {
        CdtwError::Config(m) => (CdtwStatus::InvalidArgument, m),
        other => (CdtwStatus::InvalidNorm, other.to_string()),
    })?;
    let exact = io::exact_norm(spec).map_err(lib_err)?;
    Ok(CdtwNorm { exact, resolved })
}

/// Parses a norm: `l1`, `l2`, `linf` or a JSON spec. `epsilon` is the
/// accuracy for the 2-norm; pass 0 for the default.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cdtw_norm_parse(spec: *const c_char, epsilon: f64, out: *mut *mut CdtwNorm) -> CdtwStatus {
    guard(|| {
        if spec.is_null() {
            return Err(null("spec"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let s = unsafe { CStr::from_ptr(spec) }
            .to_str()
            .map_err(|e| (CdtwStatus::InvalidArgument, format!("spec is not UTF-8: {e}")))?;
        let spec = io::parse_norm_spec(s).map_err(|e| (CdtwStatus::InvalidNorm, e.to_string()))?;
        let n = make_norm(&spec, epsilon)?;
        unsafe { *out = Box::into_raw(Box::new(n)) };
        Ok(())
    })
}

/// The norm whose unit ball is the polygon with `count` vertices
/// `x0, y0, x1, y1, ...`; it must be convex and symmetric about the origin.
///
/// # Safety
/// `xy` must point to `2 * count` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cdtw_norm_polygon(xy: *const f64, count: usize, out: *mut *mut CdtwNorm) -> CdtwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let pts = unsafe { points(xy, count) }?;
        let spec = NormSpec::Polygon {
            vertices: pts.iter().map(|p| [p.x, p.y]).collect(),
        };
        let n = make_norm(&spec, 0.0)?;
        unsafe { *out = Box::into_raw(Box::new(n)) };
        Ok(())
    })
}

/// Approximation factor guaranteed with this norm, or NaN for null.
///
/// # Safety
/// `norm` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cdtw_norm_factor_bound(norm: *const CdtwNorm) -> f64 {
    unsafe { norm.as_ref() }.map_or(f64::NAN, |n| n.resolved.factor_bound)
}

/// Releases a norm. Null is ignored.
///
/// # Safety
/// `norm` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cdtw_norm_free(norm: *mut CdtwNorm) {
    if !norm.is_null() {
        drop(unsafe { Box::from_raw(norm) });
    }
}

/// Approximates the distance between `p` and `q`.
///
/// If `witness` is not null it receives up to `witness_cap` waypoints of
/// the witness path as `s0, t0, s1, t1, ...`; `BufferTooSmall` is returned
/// (with `out` filled) when `witness_len` exceeds the capacity.
///
/// # Safety
/// Handles must be live, `out` writable, and `witness` null or writable
/// for `2 * witness_cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn cdtw_compute(
    p: *const CdtwCurve,
    q: *const CdtwCurve,
    norm: *const CdtwNorm,
    out: *mut CdtwResult,
    witness: *mut f64,
    witness_cap: usize,
) -> CdtwStatus {
    guard(|| {
        let (Some(p), Some(q), Some(n)) = (unsafe { p.as_ref() }, unsafe { q.as_ref() }, unsafe { norm.as_ref() })
        else {
            return Err(null("curve or norm"));
        };
        if out.is_null() {
            return Err(null("out"));
        }
        let r = cdtw_approx(&p.0, &q.0, &n.resolved.handle).map_err(lib_err)?;
        let w = &r.witness.waypoints;
        unsafe {
            *out = CdtwResult {
                value: r.value,
                factor_bound: n.resolved.factor_bound,
                total_pieces: r.diagnostics.total_pieces,
                max_rank: r.diagnostics.max_rank,
                witness_len: w.len(),
            }
        };
        if !witness.is_null() {
            if w.len() > witness_cap {
                return Err((
                    CdtwStatus::BufferTooSmall,
                    format!("witness has {} waypoints, buffer holds {witness_cap}", w.len()),
                ));
            }
            // SAFETY: checked against the caller's capacity above.
            let buf = unsafe { std::slice::from_raw_parts_mut(witness, 2 * w.len()) };
            for (k, v) in w.iter().enumerate() {
                buf[2 * k] = v.x;
                buf[2 * k + 1] = v.y;
            }
        }
        Ok(())
    })
}

/// Grid reference value with `grid` subdivisions per segment, under the
/// exact (not approximated) norm.
///
/// # Safety
/// Handles must be live and `value`, `lower_hint` writable.
#[no_mangle]
pub unsafe extern "C" fn cdtw_oracle(
    p: *const CdtwCurve,
    q: *const CdtwCurve,
    norm: *const CdtwNorm,
    grid: usize,
    value: *mut f64,
    lower_hint: *mut f64,
) -> CdtwStatus {
    guard(|| {
        let (Some(p), Some(q), Some(n)) = (unsafe { p.as_ref() }, unsafe { q.as_ref() }, unsafe { norm.as_ref() })
        else {
            return Err(null("curve or norm"));
        };
        if value.is_null() || lower_hint.is_null() {
            return Err(null("output"));
        }
        let cfg = GridConfig::new(grid).map_err(|e| (CdtwStatus::InvalidArgument, e.to_string()))?;
        let r = grid_cdtw(&p.0, &q.0, &n.exact, cfg).map_err(lib_err)?;
        unsafe {
            *value = r.value;
            *lower_hint = r.lower_hint;
        }
        Ok(())
    })
}
