//! C ABI over the bound/simulate/verify pipeline.
//!
//! Conventions: every entry point returns an [`SbStatus`]; output strings
//! are UTF-8, NUL-terminated, allocated here and released with
//! [`sb_string_free`]; the engine is an opaque handle released with
//! [`sb_engine_free`]; on any non-zero status the thread-local message from
//! [`sb_last_error_message`] explains what happened. Panics never unwind
//! across the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use supbound::run::{
    compute_bound_report, compute_ensemble, compute_verification, Instance, MethodChoice,
    RunConfig,
};
use supbound::Error;

/// Result codes of every C entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SbStatus {
    /// The call succeeded.
    Ok = 0,
    /// Verification ran to completion and rejected the inputs.
    VerificationFailed = 1,
    /// Invalid configuration, parameter, or state.
    InvalidInput = 2,
    /// A string argument was not valid UTF-8 or contained an interior NUL.
    BadString = 3,
    /// An internal panic was caught at the boundary.
    Panic = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let sanitized: Vec<u8> = msg.bytes().map(|b| if b == 0 { b' ' } else { b }).collect();
    let c = CString::new(sanitized).expect("NUL bytes were just replaced");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> SbStatus {
    match err {
        Error::VerificationFailed(_) => SbStatus::VerificationFailed,
        _ => SbStatus::InvalidInput,
    }
}

/// Opaque handle: a validated configuration with its derived constants.
pub struct SbEngine {
    instance: Instance,
}

fn engine_ref<'a>(engine: *const SbEngine) -> Option<&'a SbEngine> {
    // Safety contract of the callers: a non-null engine came from
    // sb_engine_new and has not been freed.
    unsafe { engine.as_ref() }
}

fn read_c_str<'a>(ptr: *const c_char) -> Result<Option<&'a str>, SbStatus> {
    if ptr.is_null() {
        return Ok(None);
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().map(Some).map_err(|_| {
        set_error("argument is not valid UTF-8");
        SbStatus::BadString
    })
}

fn into_c_string(text: String, out: *mut *mut c_char) -> SbStatus {
    match CString::new(text) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            SbStatus::Ok
        }
        Err(_) => {
            set_error("output contained an interior NUL byte");
            SbStatus::BadString
        }
    }
}

fn guarded<F: FnOnce() -> SbStatus>(f: F) -> SbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic of unknown type".into());
            set_error(&format!("internal panic: {msg}"));
            SbStatus::Panic
        }
    }
}

/// Version of the underlying crate as a static NUL-terminated string.
/// Never freed by the caller.
#[no_mangle]
pub extern "C" fn sb_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Message describing the most recent failure on this thread, or NULL when
/// no failure happened yet. The string is owned by the library and valid
/// until the next failing call on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn sb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null(), |c| c.as_ptr())
    })
}

/// Builds an engine from a configuration JSON document (the same schema the
/// CLI reads from a file). `base_dir` resolves any relative measure path in
/// the configuration; NULL means the current directory.
///
/// On success writes an owned handle to `out_engine`.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `base_dir` NULL or
/// NUL-terminated; `out_engine` a valid location to write one pointer.
#[no_mangle]
pub unsafe extern "C" fn sb_engine_new(
    config_json: *const c_char,
    base_dir: *const c_char,
    out_engine: *mut *mut SbEngine,
) -> SbStatus {
    guarded(|| {
        if out_engine.is_null() {
            set_error("out_engine must not be NULL");
            return SbStatus::InvalidInput;
        }
        unsafe { *out_engine = ptr::null_mut() };
        let Some(text) = (match read_c_str(config_json) {
            Ok(t) => t,
            Err(s) => return s,
        }) else {
            set_error("config_json must not be NULL");
            return SbStatus::InvalidInput;
        };
        let base = match read_c_str(base_dir) {
            Ok(b) => b.unwrap_or(".").to_string(),
            Err(s) => return s,
        };
        let config: RunConfig = match serde_json::from_str(text) {
            Ok(c) => c,
            Err(e) => {
                set_error(&format!("invalid config: {e}"));
                return SbStatus::InvalidInput;
            }
        };
        match Instance::prepare(config, Path::new(&base)) {
            Ok(instance) => {
                let handle = Box::new(SbEngine { instance });
                unsafe { *out_engine = Box::into_raw(handle) };
                SbStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Releases an engine. NULL is a no-op.
///
/// # Safety
/// `engine` must be NULL or a pointer from [`sb_engine_new`] that has not
/// been freed yet.
#[no_mangle]
pub unsafe extern "C" fn sb_engine_free(engine: *mut SbEngine) {
    if !engine.is_null() {
        drop(unsafe { Box::from_raw(engine) });
    }
}

/// Releases a string returned by this library. NULL is a no-op.
///
/// # Safety
/// `s` must be NULL or an owned string produced by one of the `_json`
/// entry points, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn sb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

fn method_from(name: Option<&str>) -> Result<MethodChoice, SbStatus> {
    match name {
        None | Some("auto") => Ok(MethodChoice::Auto),
        Some("generic") => Ok(MethodChoice::Generic),
        Some("closed") => Ok(MethodChoice::Closed),
        Some(other) => {
            set_error(&format!(
                "unknown method {other:?}; expected auto, generic or closed"
            ));
            Err(SbStatus::InvalidInput)
        }
    }
}

/// Computes the tail-bound report and writes it as a JSON string to
/// `out_json`. `method` is "auto", "generic", "closed" or NULL for auto.
///
/// # Safety
/// `engine` must be a live handle from [`sb_engine_new`]; `method` NULL or
/// NUL-terminated; `out_json` a valid location to write one pointer. The
/// result string must be released with [`sb_string_free`].
#[no_mangle]
pub unsafe extern "C" fn sb_engine_bound_json(
    engine: *const SbEngine,
    method: *const c_char,
    out_json: *mut *mut c_char,
) -> SbStatus {
    guarded(|| {
        if out_json.is_null() {
            set_error("out_json must not be NULL");
            return SbStatus::InvalidInput;
        }
        unsafe { *out_json = ptr::null_mut() };
        let Some(eng) = engine_ref(engine) else {
            set_error("engine must not be NULL");
            return SbStatus::InvalidInput;
        };
        let choice = match read_c_str(method).and_then(method_from) {
            Ok(c) => c,
            Err(s) => return s,
        };
        match compute_bound_report(&eng.instance, choice) {
            Ok(report) => into_c_string(
                serde_json::to_string(&report).expect("report serializes"),
                out_json,
            ),
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Samples the supremum ensemble and writes it as a JSON string to
/// `out_json`. A negative `seed` keeps the seed from the configuration.
///
/// # Safety
/// `engine` must be a live handle from [`sb_engine_new`]; `out_json` a
/// valid location to write one pointer. The result string must be released
/// with [`sb_string_free`].
#[no_mangle]
pub unsafe extern "C" fn sb_engine_simulate_json(
    engine: *const SbEngine,
    seed: i64,
    out_json: *mut *mut c_char,
) -> SbStatus {
    guarded(|| {
        if out_json.is_null() {
            set_error("out_json must not be NULL");
            return SbStatus::InvalidInput;
        }
        unsafe { *out_json = ptr::null_mut() };
        let Some(eng) = engine_ref(engine) else {
            set_error("engine must not be NULL");
            return SbStatus::InvalidInput;
        };
        let seed = u64::try_from(seed).ok();
        match compute_ensemble(&eng.instance, seed) {
            Ok(ensemble) => into_c_string(
                serde_json::to_string(&ensemble).expect("ensemble serializes"),
                out_json,
            ),
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Runs bound, simulation and both verification layers, writing the
/// verification summary as a JSON string to `out_json`. `cz_scale`
/// multiplies the scale constant inside the modulus check; 1.0 is the
/// honest setting and values below 1 are the negative control. Returns
/// `VerificationFailed` (with the summary still written) when any layer
/// rejects.
///
/// # Safety
/// `engine` must be a live handle from [`sb_engine_new`]; `out_json` a
/// valid location to write one pointer. The result string must be released
/// with [`sb_string_free`].
#[no_mangle]
pub unsafe extern "C" fn sb_engine_verify_json(
    engine: *const SbEngine,
    cz_scale: f64,
    out_json: *mut *mut c_char,
) -> SbStatus {
    guarded(|| {
        if out_json.is_null() {
            set_error("out_json must not be NULL");
            return SbStatus::InvalidInput;
        }
        unsafe { *out_json = ptr::null_mut() };
        let Some(eng) = engine_ref(engine) else {
            set_error("engine must not be NULL");
            return SbStatus::InvalidInput;
        };
        let result = compute_bound_report(&eng.instance, MethodChoice::Auto)
            .and_then(|report| {
                let ensemble = compute_ensemble(&eng.instance, None)?;
                compute_verification(&eng.instance, &ensemble, &report, cz_scale)
            });
        match result {
            Ok(summary) => {
                let status = if summary.all_ok {
                    SbStatus::Ok
                } else {
                    set_error("verification rejected: see the summary rows");
                    SbStatus::VerificationFailed
                };
                let written = into_c_string(
                    serde_json::to_string(&summary).expect("summary serializes"),
                    out_json,
                );
                if written != SbStatus::Ok {
                    written
                } else {
                    status
                }
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}
