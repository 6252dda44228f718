//! C ABI for gietlab.
//!
//! Objects are opaque handles created by `gietlab_*_new`-style functions and released
//! with the matching `*_free`. Every fallible call returns a [`GietlabStatus`]; the
//! message of the last failure on the calling thread is available from
//! [`gietlab_last_error_message`].

use gietlab::giet::Giet;
use gietlab::lab::config::ExperimentConfig;
use gietlab::lab::{run, Experiment};
use gietlab::renorm::renormalize_n;
use gietlab::shadowing::{shoot, ShadowingProblem, ShootConfig, DEFAULT_ESCAPE_RADIUS};
use gietlab::systems::System;
use gietlab::Error;
use rand::SeedableRng;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GietlabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    Consistency = 5,
    Io = 6,
    Panic = 7,
}

/// A fixed point of renormalisation together with its loop and splitting.
pub struct GietlabSystem {
    inner: System,
}

/// A generalised interval exchange map.
pub struct GietlabMap {
    inner: Giet,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> GietlabStatus {
    match e {
        Error::InvalidInput(_) | Error::Reducible(_) => GietlabStatus::InvalidArgument,
        Error::Config(_) => GietlabStatus::Config,
        Error::Io(_) => GietlabStatus::Io,
        Error::Consistency(_) => GietlabStatus::Consistency,
        _ => GietlabStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (GietlabStatus, String)>) -> GietlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GietlabStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            GietlabStatus::Panic
        }
    }
}

fn lib(e: Error) -> (GietlabStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (GietlabStatus, String) {
    (GietlabStatus::NullPointer, format!("{name} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, (GietlabStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (GietlabStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

unsafe fn out<T>(p: *mut T, v: T) {
    ptr::write(p, v);
}

/// Message of the last failure on this thread, or NULL. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn gietlab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gietlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Builds a system from a one-based permutation and a loop literal over `t`/`b`.
///
/// # Safety
/// `permutation` must point to `d` readable values, `loop_literal` must be a
/// NUL-terminated string and `out_system` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gietlab_system_new(
    permutation: *const usize,
    d: usize,
    loop_literal: *const c_char,
    grid_size: usize,
    out_system: *mut *mut GietlabSystem,
) -> GietlabStatus {
    guard(|| {
        if permutation.is_null() {
            return Err(null("permutation"));
        }
        if out_system.is_null() {
            return Err(null("out_system"));
        }
        let perm = std::slice::from_raw_parts(permutation, d);
        let lp = str_arg(loop_literal, "loop_literal")?;
        let inner = System::from_literals("custom", perm, lp, grid_size).map_err(lib)?;
        out(out_system, Box::into_raw(Box::new(GietlabSystem { inner })));
        Ok(())
    })
}

/// Builds a named preset system, `"golden"` or `"d4"`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out_system` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gietlab_system_preset(
    name: *const c_char,
    grid_size: usize,
    out_system: *mut *mut GietlabSystem,
) -> GietlabStatus {
    guard(|| {
        if out_system.is_null() {
            return Err(null("out_system"));
        }
        let inner = match str_arg(name, "name")? {
            "golden" => System::golden(grid_size),
            "d4" => System::genus_two(grid_size),
            other => return Err((GietlabStatus::InvalidArgument, format!("unknown preset {other:?}"))),
        }
        .map_err(lib)?;
        out(out_system, Box::into_raw(Box::new(GietlabSystem { inner })));
        Ok(())
    })
}

/// # Safety
/// `system` must be NULL or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn gietlab_system_free(system: *mut GietlabSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// Number of intervals, or 0 for NULL.
///
/// # Safety
/// `system` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gietlab_system_d(system: *const GietlabSystem) -> usize {
    system.as_ref().map_or(0, |s| s.inner.d())
}

/// Perron eigenvalue of the loop matrix.
///
/// # Safety
/// `system` must be a live handle and `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn gietlab_system_perron(system: *const GietlabSystem, out_value: *mut f64) -> GietlabStatus {
    guard(|| {
        let s = system.as_ref().ok_or_else(|| null("system"))?;
        if out_value.is_null() {
            return Err(null("out_value"));
        }
        out(out_value, s.inner.spectrum.perron_value);
        Ok(())
    })
}

/// A copy of the fixed point `T₀` of the system.
///
/// # Safety
/// `system` must be a live handle and `out_map` writable.
#[no_mangle]
pub unsafe extern "C" fn gietlab_system_reference_map(
    system: *const GietlabSystem,
    out_map: *mut *mut GietlabMap,
) -> GietlabStatus {
    guard(|| {
        let s = system.as_ref().ok_or_else(|| null("system"))?;
        if out_map.is_null() {
            return Err(null("out_map"));
        }
        out(out_map, Box::into_raw(Box::new(GietlabMap { inner: s.inner.t0.clone() })));
        Ok(())
    })
}

/// Shoots along the stable manifold from a random slice point at `radius`.
/// Writes the shadowing map and the depth reached.
///
/// # Safety
/// `system` must be a live handle; `out_map` and `out_depth` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gietlab_shoot(
    system: *const GietlabSystem,
    seed: u64,
    radius: f64,
    depth: usize,
    out_map: *mut *mut GietlabMap,
    out_depth: *mut usize,
) -> GietlabStatus {
    guard(|| {
        let s = system.as_ref().ok_or_else(|| null("system"))?;
        if out_map.is_null() || out_depth.is_null() {
            return Err(null("output pointer"));
        }
        let sys = &s.inner;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let p = ShadowingProblem::random_slice(sys, &mut rng, radius, depth, DEFAULT_ESCAPE_RADIUS).map_err(lib)?;
        let r = shoot(sys, &p, &ShootConfig { seed, ..ShootConfig::default() }).map_err(lib)?;
        let map = r.map(sys, &p).map_err(lib)?;
        out(out_depth, r.achieved_depth);
        out(out_map, Box::into_raw(Box::new(GietlabMap { inner: map })));
        Ok(())
    })
}

/// # Safety
/// `map` must be NULL or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn gietlab_map_free(map: *mut GietlabMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// `T(x)` and the branch containing `x`.
///
/// # Safety
/// `map` must be a live handle; `out_value` must be writable; `out_branch` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn gietlab_map_eval(
    map: *const GietlabMap,
    x: f64,
    out_value: *mut f64,
    out_branch: *mut usize,
) -> GietlabStatus {
    guard(|| {
        let m = map.as_ref().ok_or_else(|| null("map"))?;
        if out_value.is_null() {
            return Err(null("out_value"));
        }
        let (y, i) = m.inner.eval_checked(x).map_err(lib)?;
        out(out_value, y);
        if !out_branch.is_null() {
            out(out_branch, i);
        }
        Ok(())
    })
}

/// Copies the top interval lengths into `buf`, which must hold `gietlab_map_d` values.
///
/// # Safety
/// `map` must be a live handle and `buf` must point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn gietlab_map_lengths(map: *const GietlabMap, buf: *mut f64, len: usize) -> GietlabStatus {
    guard(|| {
        let m = map.as_ref().ok_or_else(|| null("map"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let l = m.inner.affine().lambda();
        if len < l.len() {
            return Err((GietlabStatus::InvalidArgument, format!("buffer holds {len} values, need {}", l.len())));
        }
        std::slice::from_raw_parts_mut(buf, l.len()).copy_from_slice(l);
        Ok(())
    })
}

/// Number of intervals, or 0 for NULL.
///
/// # Safety
/// `map` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gietlab_map_d(map: *const GietlabMap) -> usize {
    map.as_ref().map_or(0, |m| m.inner.d())
}

/// `Rⁿ(map)` along the system's loop.
///
/// # Safety
/// Both handles must be live and `out_map` writable.
#[no_mangle]
pub unsafe extern "C" fn gietlab_map_renormalize(
    system: *const GietlabSystem,
    map: *const GietlabMap,
    n: usize,
    out_map: *mut *mut GietlabMap,
) -> GietlabStatus {
    guard(|| {
        let s = system.as_ref().ok_or_else(|| null("system"))?;
        let m = map.as_ref().ok_or_else(|| null("map"))?;
        if out_map.is_null() {
            return Err(null("out_map"));
        }
        let (mut levels, _) = renormalize_n(&m.inner, &s.inner.lp, n).map_err(lib)?;
        let inner = levels.pop().ok_or_else(|| (GietlabStatus::Consistency, "empty orbit".to_string()))?;
        out(out_map, Box::into_raw(Box::new(GietlabMap { inner })));
        Ok(())
    })
}

/// `d_{Cʳ}(a, b)` for `r` in 0..=3.
///
/// # Safety
/// Both handles must be live and `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn gietlab_map_distance(
    a: *const GietlabMap,
    b: *const GietlabMap,
    r: usize,
    out_value: *mut f64,
) -> GietlabStatus {
    guard(|| {
        let a = a.as_ref().ok_or_else(|| null("a"))?;
        let b = b.as_ref().ok_or_else(|| null("b"))?;
        if out_value.is_null() {
            return Err(null("out_value"));
        }
        if r > 3 {
            return Err((GietlabStatus::InvalidArgument, format!("order {r} exceeds 3")));
        }
        out(out_value, a.inner.cr_distance(&b.inner, r).map_err(lib)?);
        Ok(())
    })
}

/// Runs experiment `experiment` (`"E1"`..`"E8"`) on a JSON configuration and writes the
/// summary JSON to `out_summary` (free with [`gietlab_string_free`]) and the exit code.
/// A failed run still returns `Ok` with a nonzero exit code; only rejected input fails.
///
/// # Safety
/// Strings must be NUL-terminated; `config_json` may be NULL for defaults; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn gietlab_run_experiment(
    experiment: *const c_char,
    config_json: *const c_char,
    out_summary: *mut *mut c_char,
    out_exit_code: *mut i32,
) -> GietlabStatus {
    guard(|| {
        if out_summary.is_null() || out_exit_code.is_null() {
            return Err(null("output pointer"));
        }
        let exp: Experiment = str_arg(experiment, "experiment")?.parse().map_err(lib)?;
        let text = if config_json.is_null() { None } else { Some(str_arg(config_json, "config_json")?) };
        let cfg = ExperimentConfig::from_json(text, &[]).map_err(lib)?;
        let outcome = run(exp, &cfg);
        let json = serde_json::to_string(&outcome.summary)
            .map_err(|e| (GietlabStatus::Consistency, e.to_string()))?;
        out(out_exit_code, outcome.exit_code);
        out(out_summary, CString::new(json).unwrap_or_default().into_raw());
        Ok(())
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn gietlab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
