#ifndef STABLEFIT_H
#define STABLEFIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define SF_FLAG_ALPHA_CLAMPED 1

#define SF_FLAG_BETA_CLAMPED (1 << 1)

#define SF_FLAG_NEAR_ALPHA_ONE (1 << 2)

#define SF_FLAG_DEGENERATE_DATA (1 << 3)

#define SF_FLAG_NOT_CONVERGED (1 << 4)

#define SF_FLAG_SMALL_SAMPLE (1 << 5)

#define SF_FLAG_FIT_FAILED (1 << 6)

/**
 * Result codes.
 */
typedef enum SfStatus {
  SF_STATUS_OK = 0,
  SF_STATUS_NULL_POINTER = 1,
  SF_STATUS_DOMAIN = 2,
  SF_STATUS_CONVERGENCE = 3,
  SF_STATUS_EMPTY_DATA = 4,
  SF_STATUS_DEGENERATE = 5,
  SF_STATUS_NEAR_ALPHA_ONE = 6,
  SF_STATUS_BRANCH_CUT = 7,
  SF_STATUS_ALPHA_OUT_OF_RANGE = 8,
  SF_STATUS_TOO_SHORT = 9,
  SF_STATUS_INVALID_GRID = 10,
  SF_STATUS_PARSE = 11,
  SF_STATUS_NO_DATA = 12,
  SF_STATUS_EMPTY_RANGE = 13,
  SF_STATUS_IO = 14,
  SF_STATUS_OUT_OF_BOUNDS = 15,
  SF_STATUS_PANIC = 16,
} SfStatus;

/**
 * Opaque result of a full fit.
 */
typedef struct SfFitResult SfFitResult;

/**
 * Opaque stable-law parameters.
 */
typedef struct SfParams SfParams;

/**
 * Opaque result of a rolling fit.
 */
typedef struct SfRolling SfRolling;

/**
 * Estimator settings. `k_max <= 0` selects the modulus-threshold rule with
 * `k_threshold`; a positive `k_max` fixes the grid end in normalized units.
 */
typedef struct SfConfig {
  size_t n_k_points;
  double k_threshold;
  double k_max;
  double normalization_tol;
  size_t max_normalization_iters;
  bool alpha_clamp;
} SfConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

struct SfConfig sf_config_default(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sf_version(void);

/**
 * Copy the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length excluding the NUL.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t sf_last_error_message(char *buf, size_t len);

/**
 * # Safety
 * `out_params` must be a valid pointer to receive the new handle.
 */
enum SfStatus sf_params_new(double alpha,
                            double beta,
                            double gamma,
                            double delta,
                            struct SfParams **out_params);

/**
 * # Safety
 * `params` must be null or a handle from `sf_params_new` not yet freed.
 */
void sf_params_free(struct SfParams *params);

/**
 * # Safety
 * `params` must be a live handle; output pointers must be valid.
 */
enum SfStatus sf_params_values(const struct SfParams *params,
                               double *alpha,
                               double *beta,
                               double *gamma,
                               double *delta);

/**
 * Characteristic function at `k`.
 *
 * # Safety
 * `params` must be a live handle; `re` and `im` must be valid.
 */
enum SfStatus sf_char_fn(const struct SfParams *params, double k, double *re, double *im);

/**
 * Density at `x` to absolute tolerance `tol`.
 *
 * # Safety
 * `params` must be a live handle; `density` must be valid.
 */
enum SfStatus sf_pdf(const struct SfParams *params, double x, double tol, double *density);

/**
 * Densities on `n_points` uniform abscissae; both buffers hold `n_points` values.
 *
 * # Safety
 * `params` must be a live handle; the buffers must hold `n_points` doubles.
 */
enum SfStatus sf_pdf_grid(const struct SfParams *params,
                          double x_min,
                          double x_max,
                          size_t n_points,
                          double tol,
                          double *x_values,
                          double *f_values);

/**
 * `n` draws into `values`; identical for identical `seed`.
 *
 * # Safety
 * `params` must be a live handle; `values` must hold `n` doubles.
 */
enum SfStatus sf_sample(const struct SfParams *params, size_t n, uint64_t seed, double *values);

/**
 * Fit all four parameters to `n` values. `config` may be null for defaults.
 *
 * # Safety
 * `data` must hold `n` doubles; `config` must be null or valid; `out_result`
 * must be valid.
 */
enum SfStatus sf_fit(const double *data,
                     size_t n,
                     const struct SfConfig *config,
                     struct SfFitResult **out_result);

/**
 * # Safety
 * `result` must be null or a handle from `sf_fit` not yet freed.
 */
void sf_fit_result_free(struct SfFitResult *result);

/**
 * Fitted parameters as a new handle, to be released with `sf_params_free`.
 *
 * # Safety
 * `result` must be a live handle; `out_params` must be valid.
 */
enum SfStatus sf_fit_result_params(const struct SfFitResult *result, struct SfParams **out_params);

/**
 * # Safety
 * `result` must be a live handle; output pointers must be valid.
 */
enum SfStatus sf_fit_result_diagnostics(const struct SfFitResult *result,
                                        double *alpha_gamma_residual,
                                        double *beta_delta_residual,
                                        size_t *iterations,
                                        uint32_t *flags);

/**
 * Rolling fit over `n` returns: entry `i` is fitted on returns
 * `i .. i + window` and belongs to return index `i + window`.
 *
 * # Safety
 * `returns` must hold `n` doubles; `config` must be null or valid;
 * `out_rolling` must be valid.
 */
enum SfStatus sf_rolling_fit(const double *returns,
                             size_t n,
                             size_t window,
                             const struct SfConfig *config,
                             struct SfRolling **out_rolling);

/**
 * # Safety
 * `rolling` must be null or a handle from `sf_rolling_fit` not yet freed.
 */
void sf_rolling_free(struct SfRolling *rolling);

/**
 * Number of entries, or 0 for a null handle.
 *
 * # Safety
 * `rolling` must be null or a live handle.
 */
size_t sf_rolling_len(const struct SfRolling *rolling);

/**
 * Entry `i`. Failed windows report NaN estimates and carry `SF_FLAG_FIT_FAILED`.
 *
 * # Safety
 * `rolling` must be a live handle; output pointers must be valid.
 */
enum SfStatus sf_rolling_get(const struct SfRolling *rolling,
                             size_t i,
                             size_t *index,
                             double *alpha,
                             double *beta,
                             uint32_t *flags);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STABLEFIT_H */
