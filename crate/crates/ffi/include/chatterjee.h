#ifndef CHATTERJEE_H
#define CHATTERJEE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum XiStatus {
  XI_STATUS_OK = 0,
  XI_STATUS_NULL_POINTER = 1,
  XI_STATUS_INVALID_ARGUMENT = 2,
  XI_STATUS_UTF8 = 3,
  XI_STATUS_JSON = 4,
  XI_STATUS_UNKNOWN_MODEL = 5,
  XI_STATUS_BAD_PARAMS = 6,
  XI_STATUS_BAD_PMF = 7,
  XI_STATUS_DEGENERATE_Y = 8,
  XI_STATUS_ALL_Y_EQUAL = 9,
  XI_STATUS_TOO_FEW_OBSERVATIONS = 10,
  XI_STATUS_NON_FINITE = 11,
  XI_STATUS_SUPPORT_TOO_LARGE = 12,
  XI_STATUS_NO_X_TIES = 13,
  XI_STATUS_BAD_M = 14,
  XI_STATUS_NO_PMF = 15,
  XI_STATUS_ARITY_GUARD = 16,
  XI_STATUS_ZERO_SIGMA = 17,
  XI_STATUS_IO = 18,
  XI_STATUS_PANIC = 99,
} XiStatus;

/**
 * A law of (X, Y): builtin, PMF-backed or generative.
 */
typedef struct XiModel XiModel;

/**
 * Paired observations.
 */
typedef struct XiSample XiSample;

/**
 * Population quantities. Fields without a value are NaN.
 */
typedef struct XiTheory {
  /**
   * 0 for exact enumeration, 1 for Monte Carlo.
   */
  int32_t method;
  double mu1;
  double mu2;
  double sigma1_sq;
  double sigma2_sq;
  double sigma12;
  double sigma_sq;
  double xi;
  double xi_dss;
  double sigma_sq_se;
  double xi_se;
} XiTheory;

typedef struct XiInterval {
  double point;
  double lower;
  double upper;
  double level;
} XiInterval;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static name of a status code.
 */
const char *xi_status_name(enum XiStatus status);

/**
 * Message for the last failed call on this thread, or NULL. The pointer is
 * valid until the next library call on the same thread.
 */
const char *xi_last_error_message(void);

/**
 * Copies `n` pairs into a new sample.
 *
 * # Safety
 * `x` and `y` must point to `n` readable doubles; `out` must be writable.
 */
enum XiStatus xi_sample_new(const double *x, const double *y, size_t n, struct XiSample **out);

/**
 * Number of observations, or 0 for NULL.
 *
 * # Safety
 * `sample` must be NULL or a live handle.
 */
size_t xi_sample_len(const struct XiSample *sample);

/**
 * # Safety
 * `sample` must be NULL or a handle not yet freed.
 */
void xi_sample_free(struct XiSample *sample);

/**
 * Builds a model from a JSON spec such as
 * `{"name": "indep_binomial", "params": {"trials": 10, "p": 0.333}}` or
 * `{"pmf": {"support_x": [...], "support_y": [...], "prob": [[...]]}}`.
 *
 * # Safety
 * `spec` must be a NUL-terminated string; `out` must be writable.
 */
enum XiStatus xi_model_from_json(const char *spec, struct XiModel **out);

/**
 * # Safety
 * `model` must be NULL or a handle not yet freed.
 */
void xi_model_free(struct XiModel *model);

/**
 * Draws `n` i.i.d. pairs from `model`.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum XiStatus xi_model_sample(const struct XiModel *model,
                              size_t n,
                              uint64_t seed,
                              struct XiSample **out);

/**
 * ξₙ with X ties broken from `seed`.
 *
 * # Safety
 * `sample` must be a live handle; `out` must be writable.
 */
enum XiStatus xi_compute(const struct XiSample *sample, uint64_t seed, double *out);

/**
 * Exact limiting quantities; fails with `NoPmf` for generative models.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum XiStatus xi_theory_exact(const struct XiModel *model, struct XiTheory *out);

/**
 * Monte Carlo limiting quantities.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum XiStatus xi_theory_mc(const struct XiModel *model,
                           size_t n_outer,
                           size_t n_inner,
                           uint64_t seed,
                           struct XiTheory *out);

/**
 * Normal interval with the plug-in variance.
 *
 * # Safety
 * `sample` must be a live handle; `out` must be writable.
 */
enum XiStatus xi_ci_plugin(const struct XiSample *sample,
                           double level,
                           uint64_t seed,
                           struct XiInterval *out);

/**
 * m-out-of-n bootstrap interval; `m = 0` selects the default ⌈n^(2/3)⌉.
 *
 * # Safety
 * `sample` must be a live handle; `out` must be writable.
 */
enum XiStatus xi_ci_bootstrap(const struct XiSample *sample,
                              size_t m,
                              size_t b,
                              double level,
                              uint64_t seed,
                              struct XiInterval *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHATTERJEE_H */
