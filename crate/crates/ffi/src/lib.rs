//! C ABI for the bimi-lab core.
//!
//! Conventions:
//!
//! - fallible calls return a [`BlStatus`] code and write results through out
//!   pointers; `bl_last_error_message` returns a thread-local description of
//!   the most recent failure;
//! - environments are opaque handles created by `bl_env_*_new`, stepped with
//!   `bl_env_step`, and released with `bl_env_free`;
//! - strings returned by the library are heap-allocated and must be released
//!   with `bl_string_free`.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use bimi_lab::bimi::{self, ConformalThreshold};
use bimi_lab::env::{Action, EnvConfig, EnvInstance};
use bimi_lab::metrics;

/// Status codes returned by fallible calls.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlStatus {
    BlOk = 0,
    BlNullPointer = 1,
    BlInvalidArgument = 2,
    BlUsageError = 3,
    BlInternalError = 4,
}

/// Result of one environment step.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BlStepInfo {
    /// Sparse extrinsic reward (0 or 1).
    pub reward: f64,
    /// Episode finished.
    pub done: u8,
    /// All targets completed.
    pub goal_reached: u8,
    /// Episode ended in an absorbing failure.
    pub failed: u8,
    /// Agent position after the step.
    pub x: i32,
    pub y: i32,
    /// Step counter after the step.
    pub t: u64,
    /// Number of events emitted this step (fetch via bl_env_last_events_json).
    pub n_events: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn error_status(err: &bimi_lab::Error) -> BlStatus {
    set_error(err.to_string());
    match err {
        bimi_lab::Error::Usage(_) => BlStatus::BlUsageError,
        bimi_lab::Error::Config(_) | bimi_lab::Error::Generation(_) => BlStatus::BlInvalidArgument,
        _ => BlStatus::BlInternalError,
    }
}

fn guard<F: FnOnce() -> BlStatus>(f: F) -> BlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic".into());
            BlStatus::BlInternalError
        }
    }
}

fn leak_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .map(|c| c.into_raw())
        .unwrap_or(std::ptr::null_mut())
}

/// Message describing the most recent error on this thread. The pointer is
/// valid until the next failing call on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn bl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow().as_ref().map(|c| c.as_ptr()).unwrap_or(std::ptr::null())
    })
}

/// Library version as a static string; do not free it.
#[no_mangle]
pub extern "C" fn bl_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must be a pointer previously returned by a `bl_*` call, or null.
#[no_mangle]
pub unsafe extern "C" fn bl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Geometric score over per-instruction success rates.
///
/// # Safety
/// `rates` must point to `len` readable doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bl_score_metric(rates: *const f64, len: usize, out: *mut f64) -> BlStatus {
    guard(|| {
        if rates.is_null() || out.is_null() {
            set_error("null pointer".into());
            return BlStatus::BlNullPointer;
        }
        let slice = std::slice::from_raw_parts(rates, len);
        match metrics::score_metric(slice) {
            Ok(v) => {
                *out = v;
                BlStatus::BlOk
            }
            Err(e) => error_status(&e),
        }
    })
}

/// Lower-interpolation conformal quantile of calibration scores.
///
/// # Safety
/// `scores` must point to `len` readable doubles and `out_q_hat` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn bl_calibrate_threshold(
    scores: *const f64,
    len: usize,
    alpha: f64,
    out_q_hat: *mut f64,
) -> BlStatus {
    guard(|| {
        if scores.is_null() || out_q_hat.is_null() {
            set_error("null pointer".into());
            return BlStatus::BlNullPointer;
        }
        let slice = std::slice::from_raw_parts(scores, len);
        match bimi::calibrate_threshold(slice, alpha) {
            Ok(thr) => {
                *out_q_hat = thr.q_hat;
                BlStatus::BlOk
            }
            Err(e) => error_status(&e),
        }
    })
}

/// One-time binary gate: 1 iff `score >= q_hat` and the gate has not fired.
#[no_mangle]
pub extern "C" fn bl_binary_reward(score: f64, q_hat: f64, fired: u8) -> f64 {
    let thr = ConformalThreshold { q_hat, alpha: 0.1, n: 1 };
    bimi::binary_reward(score, &thr, fired != 0)
}

/// Frequency-damped binary reward `max(gate - p_lk, 0)`.
#[no_mangle]
pub extern "C" fn bl_bimi_reward(score: f64, q_hat: f64, p_lk: f64, fired: u8) -> f64 {
    let thr = ConformalThreshold { q_hat, alpha: 0.1, n: 1 };
    bimi::bimi_reward(score, &thr, p_lk.clamp(0.0, 1.0), fired != 0)
}

/// Combined step reward `r_e + (1 - beta) * gamma * r_v`.
#[no_mangle]
pub extern "C" fn bl_combine_rewards(r_e: f64, r_v: f64, beta: f64, gamma: f64) -> f64 {
    bimi::combine_rewards(r_e, r_v, beta, gamma)
}

/// Opaque environment handle.
pub struct BlEnv {
    env: EnvInstance,
    last_events: Vec<String>,
}

/// Create a grid-sequence environment from generation parameters.
///
/// # Safety
/// `out` must be a writable pointer slot; the returned handle must be
/// released with `bl_env_free`.
#[no_mangle]
pub unsafe extern "C" fn bl_env_gridseq_new(
    seed: u64,
    rows: u32,
    cols: u32,
    room_size: u32,
    num_targets: u32,
    out: *mut *mut BlEnv,
) -> BlStatus {
    guard(|| {
        if out.is_null() {
            set_error("null pointer".into());
            return BlStatus::BlNullPointer;
        }
        let cfg = match bimi_lab::env::generate_gridseq(
            seed,
            rows as usize,
            cols as usize,
            room_size as usize,
            num_targets as usize,
        ) {
            Ok(c) => c,
            Err(e) => return error_status(&e),
        };
        match EnvConfig::Gridseq(cfg).build() {
            Ok(env) => {
                *out = Box::into_raw(Box::new(BlEnv { env, last_events: Vec::new() }));
                BlStatus::BlOk
            }
            Err(e) => error_status(&e),
        }
    })
}

/// Create a platform-room environment.
///
/// # Safety
/// `out` must be a writable pointer slot; the returned handle must be
/// released with `bl_env_free`.
#[no_mangle]
pub unsafe extern "C" fn bl_env_platform_new(
    seed: u64,
    width: i32,
    height: i32,
    out: *mut *mut BlEnv,
) -> BlStatus {
    guard(|| {
        if out.is_null() {
            set_error("null pointer".into());
            return BlStatus::BlNullPointer;
        }
        let cfg = match bimi_lab::env::PlatformRoomConfig::generate(seed, width, height) {
            Ok(c) => c,
            Err(e) => return error_status(&e),
        };
        match EnvConfig::Platform(cfg).build() {
            Ok(env) => {
                *out = Box::into_raw(Box::new(BlEnv { env, last_events: Vec::new() }));
                BlStatus::BlOk
            }
            Err(e) => error_status(&e),
        }
    })
}

/// Reset the episode.
///
/// # Safety
/// `env` must be a live handle from `bl_env_*_new`.
#[no_mangle]
pub unsafe extern "C" fn bl_env_reset(env: *mut BlEnv, seed: u64) -> BlStatus {
    guard(|| {
        let Some(env) = env.as_mut() else {
            set_error("null pointer".into());
            return BlStatus::BlNullPointer;
        };
        env.env.reset(seed);
        env.last_events.clear();
        BlStatus::BlOk
    })
}

/// Step with an action index (0 up, 1 down, 2 left, 3 right, 4 interact,
/// 5 noop).
///
/// # Safety
/// `env` must be a live handle and `info` writable.
#[no_mangle]
pub unsafe extern "C" fn bl_env_step(env: *mut BlEnv, action: u32, info: *mut BlStepInfo) -> BlStatus {
    guard(|| {
        let Some(handle) = env.as_mut() else {
            set_error("null pointer".into());
            return BlStatus::BlNullPointer;
        };
        if info.is_null() {
            set_error("null pointer".into());
            return BlStatus::BlNullPointer;
        }
        let Some(action) = Action::from_index(action as usize) else {
            set_error(format!("invalid action index {action}"));
            return BlStatus::BlInvalidArgument;
        };
        match handle.env.step(action) {
            Ok(sr) => {
                handle.last_events = sr.events.clone();
                *info = BlStepInfo {
                    reward: sr.reward,
                    done: sr.done as u8,
                    goal_reached: handle.env.goal_reached() as u8,
                    failed: sr.state.failed as u8,
                    x: sr.state.position.0,
                    y: sr.state.position.1,
                    t: sr.state.t as u64,
                    n_events: sr.events.len() as u32,
                };
                BlStatus::BlOk
            }
            Err(e) => error_status(&e),
        }
    })
}

/// Events emitted by the most recent step, as a JSON array string. Free
/// with `bl_string_free`.
///
/// # Safety
/// `env` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bl_env_last_events_json(env: *const BlEnv, out: *mut *mut c_char) -> BlStatus {
    guard(|| {
        let Some(handle) = env.as_ref() else {
            set_error("null pointer".into());
            return BlStatus::BlNullPointer;
        };
        if out.is_null() {
            set_error("null pointer".into());
            return BlStatus::BlNullPointer;
        }
        match serde_json::to_string(&handle.last_events) {
            Ok(json) => {
                *out = leak_string(json);
                BlStatus::BlOk
            }
            Err(e) => {
                set_error(e.to_string());
                BlStatus::BlInternalError
            }
        }
    })
}

/// Plain-text map of the environment. Free with `bl_string_free`.
///
/// # Safety
/// `env` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bl_env_render(env: *const BlEnv, out: *mut *mut c_char) -> BlStatus {
    guard(|| {
        let Some(handle) = env.as_ref() else {
            set_error("null pointer".into());
            return BlStatus::BlNullPointer;
        };
        if out.is_null() {
            set_error("null pointer".into());
            return BlStatus::BlNullPointer;
        }
        *out = leak_string(handle.env.render());
        BlStatus::BlOk
    })
}

/// Release an environment handle.
///
/// # Safety
/// `env` must be a handle from `bl_env_*_new` (or null), not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bl_env_free(env: *mut BlEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Run the theory verification suite and return the JSON report. Free with
/// `bl_string_free`. `all_pass` (when non-null) receives 1 if every claim
/// passed.
///
/// # Safety
/// `out` must be writable; `all_pass` may be null.
#[no_mangle]
pub unsafe extern "C" fn bl_theory_report_json(
    seed: u64,
    out: *mut *mut c_char,
    all_pass: *mut u8,
) -> BlStatus {
    guard(|| {
        if out.is_null() {
            set_error("null pointer".into());
            return BlStatus::BlNullPointer;
        }
        let report = bimi_lab::theory::run_verification(seed);
        if !all_pass.is_null() {
            *all_pass = report.all_pass as u8;
        }
        match serde_json::to_string(&report) {
            Ok(json) => {
                *out = leak_string(json);
                BlStatus::BlOk
            }
            Err(e) => {
                set_error(e.to_string());
                BlStatus::BlInternalError
            }
        }
    })
}

/// # Safety
/// Exercised from tests; pointers follow the same rules as in the C API.
#[allow(dead_code)]
unsafe fn cstr<'a>(s: *const c_char) -> &'a str {
    CStr::from_ptr(s).to_str().unwrap()
}
