//! C ABI over `salem-core`.
//!
//! Trees are opaque `SalemTree` handles released with [`salem_tree_free`].
//! Every fallible call returns a [`SalemStatus`]; on failure the message is
//! available from [`salem_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use salem_core::ap_verifier::ap_report;
use salem_core::cantor_tree::{build_tree, load_tree, save_tree, schedule_a, schedule_b, MeasureTree};
use salem_core::discrete_ap::ResidueSet;
use salem_core::fourier::{mu_hat, mu_hat_batch_tree};
use salem_core::regularity::ball_mass_tree;
use salem_core::Error;

/// Opaque tree handle.
pub struct SalemTree(MeasureTree);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SalemStatus {
    Ok = 0,
    InvalidArgument = 1,
    Precondition = 2,
    DepthExceeded = 3,
    Schema = 4,
    Io = 5,
    NullPointer = 6,
    Panic = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> SalemStatus {
    match err {
        Error::InvalidArgument(_) => SalemStatus::InvalidArgument,
        Error::Precondition(_) => SalemStatus::Precondition,
        Error::DepthExceeded { .. } => SalemStatus::DepthExceeded,
        Error::Schema(_) | Error::Json(_) => SalemStatus::Schema,
        Error::Io(_) => SalemStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> Result<(), SalemStatus>) -> SalemStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SalemStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("internal panic");
            SalemStatus::Panic
        }
    }
}

fn fail(err: Error) -> SalemStatus {
    set_error(err.to_string());
    status_of(&err)
}

fn null(what: &str) -> SalemStatus {
    set_error(format!("{what} is null"));
    SalemStatus::NullPointer
}

unsafe fn tree_ref<'a>(tree: *const SalemTree) -> Result<&'a MeasureTree, SalemStatus> {
    // SAFETY: caller passes a live handle from this library or null.
    unsafe { tree.as_ref() }.map(|t| &t.0).ok_or_else(|| null("tree"))
}

unsafe fn path_arg(path: *const c_char) -> Result<String, SalemStatus> {
    if path.is_null() {
        return Err(null("path"));
    }
    // SAFETY: caller passes a NUL-terminated string.
    unsafe { CStr::from_ptr(path) }
        .to_str()
        .map(str::to_owned)
        .map_err(|_| fail(Error::InvalidArgument("path is not valid UTF-8".into())))
}

fn hand_out(tree: MeasureTree, out: *mut *mut SalemTree) -> Result<(), SalemStatus> {
    if out.is_null() {
        return Err(null("out"));
    }
    // SAFETY: checked non-null; caller owns the slot.
    unsafe { *out = Box::into_raw(Box::new(SalemTree(tree))) };
    Ok(())
}

/// Builds a variant A tree over base set `x[0..x_len]` modulo `m`.
///
/// # Safety
/// `x` must point to `x_len` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn salem_tree_build_a(
    m: u64,
    x: *const u64,
    x_len: usize,
    t: f64,
    depth: usize,
    seed: u64,
    out: *mut *mut SalemTree,
) -> SalemStatus {
    guard(|| {
        if x.is_null() && x_len > 0 {
            return Err(null("x"));
        }
        let elements = if x_len == 0 { &[][..] } else { unsafe { std::slice::from_raw_parts(x, x_len) } };
        let set = ResidueSet::new(m, elements.iter().copied()).map_err(fail)?;
        let schedule = schedule_a(m, &set, t, depth).map_err(fail)?;
        hand_out(build_tree(&schedule, seed, depth).map_err(fail)?, out)
    })
}

/// Builds a variant B tree to `depth`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn salem_tree_build_b(depth: usize, seed: u64, out: *mut *mut SalemTree) -> SalemStatus {
    guard(|| {
        let schedule = schedule_b(depth).map_err(fail)?;
        hand_out(build_tree(&schedule, seed, depth).map_err(fail)?, out)
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn salem_tree_load(path: *const c_char, out: *mut *mut SalemTree) -> SalemStatus {
    guard(|| {
        let path = unsafe { path_arg(path) }?;
        hand_out(load_tree(path).map_err(fail)?, out)
    })
}

/// # Safety
/// `tree` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn salem_tree_save(
    tree: *const SalemTree,
    path: *const c_char,
    materialize: bool,
) -> SalemStatus {
    guard(|| {
        let tree = unsafe { tree_ref(tree) }?;
        let path = unsafe { path_arg(path) }?;
        save_tree(tree, path, materialize).map_err(fail)
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `tree` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn salem_tree_free(tree: *mut SalemTree) {
    if !tree.is_null() {
        // SAFETY: allocated by Box::into_raw in hand_out.
        drop(unsafe { Box::from_raw(tree) });
    }
}

/// Depth of the tree, or 0 for a null handle.
///
/// # Safety
/// `tree` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn salem_tree_depth(tree: *const SalemTree) -> usize {
    unsafe { tree.as_ref() }.map_or(0, |t| t.0.depth())
}

/// `μ̂_n(k)` as real and imaginary parts.
///
/// # Safety
/// `tree` must be a live handle; `re` and `im` writable.
#[no_mangle]
pub unsafe extern "C" fn salem_mu_hat(
    tree: *const SalemTree,
    n: usize,
    k: i64,
    re: *mut f64,
    im: *mut f64,
) -> SalemStatus {
    guard(|| {
        let tree = unsafe { tree_ref(tree) }?;
        if re.is_null() || im.is_null() {
            return Err(null("output"));
        }
        let v = mu_hat(tree, n, k).map_err(fail)?;
        unsafe {
            *re = v.re;
            *im = v.im;
        }
        Ok(())
    })
}

/// `μ̂_n(ks[i])` into `re[i]`, `im[i]` for `i < len`.
///
/// # Safety
/// `ks` readable and `re`, `im` writable for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn salem_mu_hat_batch(
    tree: *const SalemTree,
    n: usize,
    ks: *const i64,
    len: usize,
    re: *mut f64,
    im: *mut f64,
) -> SalemStatus {
    guard(|| {
        let tree = unsafe { tree_ref(tree) }?;
        if len == 0 {
            return Ok(());
        }
        if ks.is_null() || re.is_null() || im.is_null() {
            return Err(null("buffer"));
        }
        let ks = unsafe { std::slice::from_raw_parts(ks, len) };
        let coeffs = mu_hat_batch_tree(tree, n, ks).map_err(fail)?;
        let (re, im) = unsafe { (std::slice::from_raw_parts_mut(re, len), std::slice::from_raw_parts_mut(im, len)) };
        for (i, k) in ks.iter().enumerate() {
            let v = coeffs.get(*k).expect("requested frequency present");
            re[i] = v.re;
            im[i] = v.im;
        }
        Ok(())
    })
}

/// Runs the level-`n` progression certificate; `certified` receives the verdict.
///
/// # Safety
/// `tree` must be a live handle; `certified` writable.
#[no_mangle]
pub unsafe extern "C" fn salem_verify_ap(
    tree: *const SalemTree,
    n: usize,
    line: bool,
    certified: *mut bool,
) -> SalemStatus {
    guard(|| {
        let tree = unsafe { tree_ref(tree) }?;
        if certified.is_null() {
            return Err(null("certified"));
        }
        let cert = ap_report(tree, n, line).map_err(fail)?;
        unsafe { *certified = cert.certified };
        Ok(())
    })
}

/// `μ_n((x − r, x + r))` with `x = x_num/x_den`, `r = r_num/r_den`. The
/// exact value is written to `mass` rounded to `f64`; when `exact` is not
/// null it receives the value as a `"p/q"` string to be released with
/// [`salem_string_free`].
///
/// # Safety
/// `tree` must be a live handle; `mass` writable; `exact` null or writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn salem_ball_mass(
    tree: *const SalemTree,
    n: usize,
    x_num: i64,
    x_den: i64,
    r_num: i64,
    r_den: i64,
    circle: bool,
    mass: *mut f64,
    exact: *mut *mut c_char,
) -> SalemStatus {
    guard(|| {
        let tree = unsafe { tree_ref(tree) }?;
        if mass.is_null() {
            return Err(null("mass"));
        }
        if x_den == 0 || r_den == 0 {
            return Err(fail(Error::InvalidArgument("zero denominator".into())));
        }
        let x = BigRational::new(BigInt::from(x_num), BigInt::from(x_den));
        let r = BigRational::new(BigInt::from(r_num), BigInt::from(r_den));
        let value = ball_mass_tree(tree, n, &x, &r, circle).map_err(fail)?;
        unsafe { *mass = value.to_f64().unwrap_or(f64::NAN) };
        if !exact.is_null() {
            let s = CString::new(value.to_string()).expect("no interior NUL");
            unsafe { *exact = s.into_raw() };
        }
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn salem_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: produced by CString::into_raw.
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn salem_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}
