/* C interface for the bimi-lab core library. */

#ifndef BIMI_LAB_H
#define BIMI_LAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by fallible calls.
 */
typedef enum BlStatus {
  BlOk = 0,
  BlNullPointer = 1,
  BlInvalidArgument = 2,
  BlUsageError = 3,
  BlInternalError = 4,
} BlStatus;

/**
 * Opaque environment handle.
 */
typedef struct BlEnv BlEnv;

/**
 * Result of one environment step.
 */
typedef struct BlStepInfo {
  /**
   * Sparse extrinsic reward (0 or 1).
   */
  double reward;
  /**
   * Episode finished.
   */
  uint8_t done;
  /**
   * All targets completed.
   */
  uint8_t goal_reached;
  /**
   * Episode ended in an absorbing failure.
   */
  uint8_t failed;
  /**
   * Agent position after the step.
   */
  int32_t x;
  int32_t y;
  /**
   * Step counter after the step.
   */
  uint64_t t;
  /**
   * Number of events emitted this step (fetch via bl_env_last_events_json).
   */
  uint32_t n_events;
} BlStepInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent error on this thread. The pointer is
 * valid until the next failing call on the same thread; do not free it.
 */
const char *bl_last_error_message(void);

/**
 * Library version as a static string; do not free it.
 */
const char *bl_version(void);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` must be a pointer previously returned by a `bl_*` call, or null.
 */
void bl_string_free(char *s);

/**
 * Geometric score over per-instruction success rates.
 *
 * # Safety
 * `rates` must point to `len` readable doubles and `out` must be writable.
 */
enum BlStatus bl_score_metric(const double *rates, uintptr_t len, double *out);

/**
 * Lower-interpolation conformal quantile of calibration scores.
 *
 * # Safety
 * `scores` must point to `len` readable doubles and `out_q_hat` must be
 * writable.
 */
enum BlStatus bl_calibrate_threshold(const double *scores,
                                     uintptr_t len,
                                     double alpha,
                                     double *out_q_hat);

/**
 * One-time binary gate: 1 iff `score >= q_hat` and the gate has not fired.
 */
double bl_binary_reward(double score, double q_hat, uint8_t fired);

/**
 * Frequency-damped binary reward `max(gate - p_lk, 0)`.
 */
double bl_bimi_reward(double score, double q_hat, double p_lk, uint8_t fired);

/**
 * Combined step reward `r_e + (1 - beta) * gamma * r_v`.
 */
double bl_combine_rewards(double r_e, double r_v, double beta, double gamma);

/**
 * Create a grid-sequence environment from generation parameters.
 *
 * # Safety
 * `out` must be a writable pointer slot; the returned handle must be
 * released with `bl_env_free`.
 */
enum BlStatus bl_env_gridseq_new(uint64_t seed,
                                 uint32_t rows,
                                 uint32_t cols,
                                 uint32_t room_size,
                                 uint32_t num_targets,
                                 struct BlEnv **out);

/**
 * Create a platform-room environment.
 *
 * # Safety
 * `out` must be a writable pointer slot; the returned handle must be
 * released with `bl_env_free`.
 */
enum BlStatus bl_env_platform_new(uint64_t seed, int32_t width, int32_t height, struct BlEnv **out);

/**
 * Reset the episode.
 *
 * # Safety
 * `env` must be a live handle from `bl_env_*_new`.
 */
enum BlStatus bl_env_reset(struct BlEnv *env, uint64_t seed);

/**
 * Step with an action index (0 up, 1 down, 2 left, 3 right, 4 interact,
 * 5 noop).
 *
 * # Safety
 * `env` must be a live handle and `info` writable.
 */
enum BlStatus bl_env_step(struct BlEnv *env, uint32_t action, struct BlStepInfo *info);

/**
 * Events emitted by the most recent step, as a JSON array string. Free
 * with `bl_string_free`.
 *
 * # Safety
 * `env` must be a live handle and `out` writable.
 */
enum BlStatus bl_env_last_events_json(const struct BlEnv *env, char **out);

/**
 * Plain-text map of the environment. Free with `bl_string_free`.
 *
 * # Safety
 * `env` must be a live handle and `out` writable.
 */
enum BlStatus bl_env_render(const struct BlEnv *env, char **out);

/**
 * Release an environment handle.
 *
 * # Safety
 * `env` must be a handle from `bl_env_*_new` (or null), not yet freed.
 */
void bl_env_free(struct BlEnv *env);

/**
 * Run the theory verification suite and return the JSON report. Free with
 * `bl_string_free`. `all_pass` (when non-null) receives 1 if every claim
 * passed.
 *
 * # Safety
 * `out` must be writable; `all_pass` may be null.
 */
enum BlStatus bl_theory_report_json(uint64_t seed, char **out, uint8_t *all_pass);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BIMI_LAB_H */
