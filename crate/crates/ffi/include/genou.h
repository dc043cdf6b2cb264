#ifndef GENOU_H
#define GENOU_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GenouStatus {
  GENOU_STATUS_OK = 0,
  GENOU_STATUS_NULL_POINTER = 1,
  GENOU_STATUS_INVALID_MODEL = 2,
  GENOU_STATUS_INVALID_ARGUMENT = 3,
  GENOU_STATUS_NO_POSITIVE_ROOT = 4,
  GENOU_STATUS_INSUFFICIENT_DATA = 5,
  GENOU_STATUS_BUFFER_TOO_SMALL = 6,
  GENOU_STATUS_PANIC = 7,
  GENOU_STATUS_OTHER = 8,
} GenouStatus;

typedef enum GenouJumpLaw {
  GENOU_JUMP_LAW_TWO_POINT = 0,
  GENOU_JUMP_LAW_GAUSSIAN = 1,
  GENOU_JUMP_LAW_DETERMINISTIC_ABS = 2,
} GenouJumpLaw;

/**
 * Sequence selector for [`genou_series_copy`].
 */
typedef enum GenouColumn {
  /**
   * `V_0..V_{nh}` (`n + 1` values).
   */
  GENOU_COLUMN_VOLATILITY = 0,
  /**
   * Block suprema `H_1..H_n`.
   */
  GENOU_COLUMN_BLOCK_MAX = 1,
  /**
   * Increments `I_1..I_n`.
   */
  GENOU_COLUMN_INCREMENTS = 2,
} GenouColumn;

/**
 * Opaque model handle.
 */
typedef struct GenouModel GenouModel;

/**
 * Opaque simulated-series handle.
 */
typedef struct GenouSeries GenouSeries;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *genou_last_error(void);

/**
 * Nelson diffusion `dV = lambda (a - V) dt + sigma V dW`.
 *
 * # Safety
 * `out` must be NULL or valid for writes.
 */
enum GenouStatus genou_model_nelson(double lambda, double a, double sigma, struct GenouModel **out);

/**
 * COGARCH(1,1) with compound-Poisson driver of rate `mu`; `law_param` is
 * the jump size (`two_point`, `deterministic_abs`) or standard deviation
 * (`gaussian`).
 *
 * # Safety
 * `out` must be NULL or valid for writes.
 */
enum GenouStatus genou_model_cogarch(double beta,
                                     double c,
                                     double lambda_g,
                                     double mu,
                                     enum GenouJumpLaw law,
                                     double law_param,
                                     struct GenouModel **out);

/**
 * Exponent `xi_t = sigma W_t + m t` with deterministic `eta_t = eta_rate t`.
 *
 * # Safety
 * `out` must be NULL or valid for writes.
 */
enum GenouStatus genou_model_brownian(double m,
                                      double sigma,
                                      double eta_rate,
                                      struct GenouModel **out);

/**
 * Model from a TOML table such as `family = "nelson"\nlambda = 1.0 ...`.
 *
 * # Safety
 * `doc` must be NULL or a NUL-terminated string; `out` NULL or writable.
 */
enum GenouStatus genou_model_from_toml(const char *doc, struct GenouModel **out);

/**
 * # Safety
 * `model` must be NULL or a handle from a `genou_model_*` constructor that
 * has not been freed.
 */
void genou_model_free(struct GenouModel *model);

/**
 * Positive root `alpha` of the Laplace exponent.
 *
 * # Safety
 * `model` must be NULL or a live handle; `out` NULL or writable.
 */
enum GenouStatus genou_model_find_alpha(const struct GenouModel *model, double *out);

/**
 * `Psi(v) = log E exp(-v xi_1)`.
 *
 * # Safety
 * `model` must be NULL or a live handle; `out` NULL or writable.
 */
enum GenouStatus genou_model_laplace_exponent(const struct GenouModel *model,
                                              double v,
                                              double *out);

/**
 * Stationary skeleton of `n` blocks of length `h`. `subgrid` sub-steps per
 * block for diffusion models; `bridge_sup != 0` takes exact bridge suprema.
 *
 * # Safety
 * `model` must be NULL or a live handle; `out` NULL or writable.
 */
enum GenouStatus genou_simulate_skeleton(const struct GenouModel *model,
                                         double h,
                                         size_t n,
                                         size_t subgrid,
                                         int32_t bridge_sup,
                                         uint64_t seed,
                                         struct GenouSeries **out);

/**
 * Number of blocks `n` (0 for NULL).
 *
 * # Safety
 * `series` must be NULL or a live handle.
 */
size_t genou_series_len(const struct GenouSeries *series);

/**
 * Copy a column into `buf` (capacity `cap`). `*written` receives the
 * column length even when the buffer is too small.
 *
 * # Safety
 * `series` NULL or live; `buf` NULL or valid for `cap` writes; `written`
 * NULL or writable.
 */
enum GenouStatus genou_series_copy(const struct GenouSeries *series,
                                   enum GenouColumn column,
                                   double *buf,
                                   size_t cap,
                                   size_t *written);

/**
 * # Safety
 * `series` must be NULL or a live handle, freed at most once.
 */
void genou_series_free(struct GenouSeries *series);

/**
 * Hill estimator on the `k` largest of `n` values.
 *
 * # Safety
 * `data` valid for `n` reads; `alpha_hat` and `se` NULL or writable.
 */
enum GenouStatus genou_hill(const double *data, size_t n, size_t k, double *alpha_hat, double *se);

/**
 * Sample autocovariances at lags `0..=max_lag` into `gamma` (length
 * `max_lag + 1`); `centered != 0` subtracts the mean first.
 *
 * # Safety
 * `data` valid for `n` reads; `gamma` valid for `max_lag + 1` writes.
 */
enum GenouStatus genou_sample_acv(const double *data,
                                  size_t n,
                                  size_t max_lag,
                                  int32_t centered,
                                  double *gamma);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GENOU_H */
