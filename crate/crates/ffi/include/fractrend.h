#ifndef FRACTREND_H
#define FRACTREND_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FtAlternative {
  FT_ALTERNATIVE_TWO_SIDED = 0,
  FT_ALTERNATIVE_GREATER = 1,
  FT_ALTERNATIVE_LESS = 2,
} FtAlternative;

typedef enum FtPenalty {
  FT_PENALTY_BIC = 0,
  FT_PENALTY_HQ = 1,
} FtPenalty;

typedef enum FtSimMethod {
  FT_SIM_METHOD_TYPE_I = 0,
  FT_SIM_METHOD_TYPE_II = 1,
} FtSimMethod;

/**
 * Status codes. `FT_STATUS_OK` is zero; everything else is an error.
 */
typedef enum FtStatus {
  FT_STATUS_OK = 0,
  FT_STATUS_NULL_POINTER = 1,
  /**
   * Argument outside its mathematical domain.
   */
  FT_STATUS_DOMAIN = 2,
  /**
   * Design matrix has more columns than rows.
   */
  FT_STATUS_RANK = 3,
  /**
   * Malformed input (length mismatch, non-finite values, too short).
   */
  FT_STATUS_INPUT = 4,
  /**
   * Statistic undefined, e.g. zero residual variance.
   */
  FT_STATUS_DEGENERATE = 5,
  /**
   * Inconsistent configuration.
   */
  FT_STATUS_CONFIG = 6,
  FT_STATUS_SIMULATION = 7,
  /**
   * Output buffer too small.
   */
  FT_STATUS_BUFFER = 8,
  FT_STATUS_PANIC = 9,
} FtStatus;

/**
 * Opaque information-criterion trace.
 */
typedef struct FtIcTrace FtIcTrace;

/**
 * Opaque validated series.
 */
typedef struct FtSeries FtSeries;

/**
 * Test settings. `m == 0` means use `alpha`; `k < 0` means choose the
 * trend order by information criterion up to `k_star`.
 */
typedef struct FtTestOptions {
  double delta0;
  size_t m;
  double alpha;
  int64_t k;
  size_t k_star;
  enum FtPenalty penalty;
  enum FtAlternative alternative;
  double level;
} FtTestOptions;

typedef struct FtTestOutput {
  double t_stat;
  double lm_stat;
  double p_value;
  size_t m;
  size_t k_used;
  /**
   * 1 if H0 is rejected at `level`.
   */
  int32_t reject;
  /**
   * 1 if the requested bandwidth was clamped to T/2.
   */
  int32_t bandwidth_clamped;
} FtTestOutput;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failing call on this thread, or null. Valid until
 * the next failing call on the same thread.
 */
const char *ft_last_error(void);

/**
 * Static description of a status code.
 */
const char *ft_status_str(enum FtStatus status);

/**
 * Defaults: δ₀ = 0, α = 0.65, auto order with k* = 10 and BIC,
 * two-sided, level 0.05.
 */
struct FtTestOptions ft_test_options_default(void);

/**
 * Copies `len` values into a new series handle.
 *
 * # Safety
 * `data` must point to `len` readable doubles; `out` must be writable.
 */
enum FtStatus ft_series_new(const double *data, size_t len, struct FtSeries **out);

/**
 * # Safety
 * `series` must come from [`ft_series_new`] and not be freed twice.
 */
void ft_series_free(struct FtSeries *series);

/**
 * # Safety
 * `series` must be a live handle or null.
 */
size_t ft_series_len(const struct FtSeries *series);

/**
 * t statistic on an already detrended series.
 *
 * # Safety
 * `series` must be a live handle; `out` must be writable.
 */
enum FtStatus ft_t_statistic(const struct FtSeries *series, double delta0, size_t m, double *out);

/**
 * Writes the first `m` periodogram ordinates into `out` (capacity `cap`).
 *
 * # Safety
 * `series` must be a live handle; `out` must hold `cap` doubles.
 */
enum FtStatus ft_periodogram(const struct FtSeries *series, size_t m, double *out, size_t cap);

/**
 * Detrends and tests `H0: δ = δ₀`.
 *
 * # Safety
 * `series` must be a live handle; `options` readable; `out` writable.
 */
enum FtStatus ft_test(const struct FtSeries *series,
                      const struct FtTestOptions *options,
                      struct FtTestOutput *out);

/**
 * Information criterion for k = 0..=k_star.
 *
 * # Safety
 * `series` must be a live handle; `out` writable.
 */
enum FtStatus ft_select_order(const struct FtSeries *series,
                              size_t k_star,
                              enum FtPenalty penalty,
                              struct FtIcTrace **out);

/**
 * # Safety
 * `trace` must be a live handle or null.
 */
size_t ft_ic_trace_k_hat(const struct FtIcTrace *trace);

/**
 * Number of orders evaluated (k_star + 1).
 *
 * # Safety
 * `trace` must be a live handle or null.
 */
size_t ft_ic_trace_len(const struct FtIcTrace *trace);

/**
 * IC at order `k`. Writes -INFINITY for an exact fit.
 *
 * # Safety
 * `trace` must be a live handle; `out` writable.
 */
enum FtStatus ft_ic_trace_value(const struct FtIcTrace *trace, size_t k, double *out);

/**
 * # Safety
 * `trace` must come from [`ft_select_order`] and not be freed twice.
 */
void ft_ic_trace_free(struct FtIcTrace *trace);

/**
 * Simulates `len` values of fractionally integrated noise into `out`.
 * Same seed, same output.
 *
 * # Safety
 * `out` must hold `len` doubles.
 */
enum FtStatus ft_simulate(double delta,
                          double sd,
                          enum FtSimMethod method,
                          uint64_t seed,
                          double *out,
                          size_t len);

/**
 * Asymptotic power at `c = δ√m` of the level-`level` test.
 *
 * # Safety
 * `out` must be writable.
 */
enum FtStatus ft_asymptotic_local_power(double c,
                                        double level,
                                        enum FtAlternative alternative,
                                        double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRACTREND_H */
