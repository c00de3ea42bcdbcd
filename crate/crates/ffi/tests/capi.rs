//! Exercises the C ABI exactly as a foreign caller would: through the
//! exported symbols, out-pointers, and status codes.

use std::ffi::CStr;
use std::os::raw::c_char;
use std::ptr;

use bimi_lab_ffi::*;

unsafe fn take_string(p: *mut c_char) -> String {
    assert!(!p.is_null());
    let s = CStr::from_ptr(p).to_str().unwrap().to_string();
    bl_string_free(p);
    s
}

#[test]
fn version_is_a_static_cstring() {
    let v = unsafe { CStr::from_ptr(bl_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn score_metric_matches_closed_forms() {
    let rates = [1.0, 0.0];
    let mut out = 0.0;
    let status = unsafe { bl_score_metric(rates.as_ptr(), rates.len(), &mut out) };
    assert_eq!(status, BlStatus::BlOk);
    assert!((out - (2.0_f64.sqrt() - 1.0)).abs() < 1e-12);

    // empty input is a usage error with a readable message
    let status = unsafe { bl_score_metric(rates.as_ptr(), 0, &mut out) };
    assert_eq!(status, BlStatus::BlUsageError);
    let msg = unsafe { CStr::from_ptr(bl_last_error_message()) };
    assert!(msg.to_str().unwrap().contains("success rate"));

    let status = unsafe { bl_score_metric(ptr::null(), 1, &mut out) };
    assert_eq!(status, BlStatus::BlNullPointer);
}

#[test]
fn threshold_and_rewards_round_trip() {
    let scores: Vec<f64> = (0..10).map(|i| 0.50 + 0.05 * i as f64).collect();
    let mut q_hat = 0.0;
    let status = unsafe { bl_calibrate_threshold(scores.as_ptr(), scores.len(), 0.1, &mut q_hat) };
    assert_eq!(status, BlStatus::BlOk);
    assert_eq!(q_hat, 0.90);

    assert_eq!(bl_binary_reward(0.95, q_hat, 0), 1.0);
    assert_eq!(bl_binary_reward(0.95, q_hat, 1), 0.0);
    assert!((bl_bimi_reward(0.95, q_hat, 0.3, 0) - 0.7).abs() < 1e-12);
    assert_eq!(bl_bimi_reward(0.95, q_hat, 1.0, 0), 0.0);
    assert!((bl_combine_rewards(1.0, 0.5, 0.5, 0.95) - 1.2375).abs() < 1e-12);

    let status = unsafe { bl_calibrate_threshold(scores.as_ptr(), scores.len(), 1.5, &mut q_hat) };
    assert_eq!(status, BlStatus::BlInvalidArgument);
}

#[test]
fn gridseq_episode_through_the_abi() {
    let mut env: *mut BlEnv = ptr::null_mut();
    let status = unsafe { bl_env_gridseq_new(7, 1, 2, 5, 2, &mut env) };
    assert_eq!(status, BlStatus::BlOk);
    assert!(!env.is_null());

    unsafe {
        assert_eq!(bl_env_reset(env, 0), BlStatus::BlOk);
        let mut info = std::mem::zeroed::<BlStepInfo>();
        // bump into the top wall: position unchanged, nothing emitted
        assert_eq!(bl_env_step(env, 0, &mut info), BlStatus::BlOk);
        assert_eq!((info.x, info.y), (1, 1));
        assert_eq!(info.n_events, 0);
        assert_eq!(info.reward, 0.0);
        // interact on an empty floor cell: no events either
        assert_eq!(bl_env_step(env, 4, &mut info), BlStatus::BlOk);
        let mut events: *mut c_char = ptr::null_mut();
        assert_eq!(bl_env_last_events_json(env, &mut events), BlStatus::BlOk);
        assert_eq!(take_string(events), "[]");

        // invalid action index is rejected
        assert_eq!(bl_env_step(env, 42, &mut info), BlStatus::BlInvalidArgument);

        let mut map: *mut c_char = ptr::null_mut();
        assert_eq!(bl_env_render(env, &mut map), BlStatus::BlOk);
        let map = take_string(map);
        assert!(map.contains('A') && map.contains('#'));

        bl_env_free(env);
    }
}

#[test]
fn platform_episode_and_cliff_failure() {
    let mut env: *mut BlEnv = ptr::null_mut();
    let status = unsafe { bl_env_platform_new(5, 14, 9, &mut env) };
    assert_eq!(status, BlStatus::BlOk);
    unsafe {
        let mut info = std::mem::zeroed::<BlStepInfo>();
        // walk right along the top corridor; stays alive
        for _ in 0..3 {
            assert_eq!(bl_env_step(env, 3, &mut info), BlStatus::BlOk);
        }
        assert_eq!(info.failed, 0);
        assert_eq!(info.done, 0);
        bl_env_free(env);
    }
    // bad dimensions are rejected with a message
    let mut env2: *mut BlEnv = ptr::null_mut();
    let status = unsafe { bl_env_platform_new(5, 4, 4, &mut env2) };
    assert_eq!(status, BlStatus::BlInvalidArgument);
    let msg = unsafe { CStr::from_ptr(bl_last_error_message()).to_str().unwrap() };
    assert!(msg.contains("platform room"));
}

#[test]
fn stepping_a_finished_episode_is_a_usage_error() {
    let mut env: *mut BlEnv = ptr::null_mut();
    unsafe {
        assert_eq!(bl_env_gridseq_new(3, 1, 1, 3, 1, &mut env), BlStatus::BlOk);
        let mut info = std::mem::zeroed::<BlStepInfo>();
        // exhaust the step budget (max_steps 500) with noops
        for _ in 0..500 {
            assert_eq!(bl_env_step(env, 5, &mut info), BlStatus::BlOk);
        }
        assert_eq!(info.done, 1);
        assert_eq!(bl_env_step(env, 5, &mut info), BlStatus::BlUsageError);
        bl_env_free(env);
    }
}

#[test]
fn theory_report_is_valid_json_and_passes() {
    let mut out: *mut c_char = ptr::null_mut();
    let mut all_pass = 0u8;
    let status = unsafe { bl_theory_report_json(2024, &mut out, &mut all_pass) };
    assert_eq!(status, BlStatus::BlOk);
    let json = unsafe { take_string(out) };
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["all_pass"], serde_json::json!(true));
    assert_eq!(all_pass, 1);
}

#[test]
fn generated_header_covers_the_surface() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/bimi_lab.h"))
        .expect("header generated by build.rs");
    for symbol in [
        "bl_version",
        "bl_score_metric",
        "bl_calibrate_threshold",
        "bl_binary_reward",
        "bl_bimi_reward",
        "bl_combine_rewards",
        "bl_env_gridseq_new",
        "bl_env_platform_new",
        "bl_env_step",
        "bl_env_render",
        "bl_env_free",
        "bl_theory_report_json",
        "bl_string_free",
        "typedef struct BlEnv BlEnv",
        "BIMI_LAB_H",
    ] {
        assert!(header.contains(symbol), "header missing `{symbol}`");
    }
}
