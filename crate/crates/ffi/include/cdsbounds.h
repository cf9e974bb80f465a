#ifndef CDSBOUNDS_H
#define CDSBOUNDS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum CdsStatus {
  CDS_STATUS_OK = 0,
  CDS_STATUS_NULL_POINTER = 1,
  CDS_STATUS_INVALID_ARGUMENT = 2,
  CDS_STATUS_LP_INFEASIBLE = 3,
  CDS_STATUS_LP_UNBOUNDED = 4,
  CDS_STATUS_UNSUPPORTED = 5,
  CDS_STATUS_OUT_OF_RANGE = 6,
  CDS_STATUS_BUFFER_TOO_SMALL = 7,
  CDS_STATUS_PANIC = 8,
} CdsStatus;

typedef enum CdsSide {
  /**
   * Least upper bound, dealer sells protection.
   */
  CDS_SIDE_ASK = 0,
  /**
   * Greatest lower bound, dealer buys protection.
   */
  CDS_SIDE_BID = 1,
} CdsSide;

/**
 * Opaque model handle.
 */
typedef struct CdsModel CdsModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a model with the truncated-normal recovery law `(location, scale)`.
 *
 * Quote maturities and the illiquid maturity are counts of periods of
 * length `quarter_years`; upfronts and spreads are decimals. The grid
 * covers the longest maturity. On success `*out` owns a new handle to be
 * released with `cds_model_free`.
 *
 * # Safety
 * The three quote arrays must hold `n_quotes` elements and `out` must be a
 * valid pointer.
 */
enum CdsStatus cds_model_new(double quarter_years,
                             double r_f,
                             const size_t *quote_maturities,
                             const double *upfronts,
                             const double *spreads,
                             size_t n_quotes,
                             size_t illiquid_maturity,
                             double illiquid_spread,
                             double pd1,
                             double recovery_location,
                             double recovery_scale,
                             struct CdsModel **out);

/**
 * Releases a handle from `cds_model_new`. Null is a no-op.
 *
 * # Safety
 * `model` must be null or a live handle not used afterwards.
 */
void cds_model_free(struct CdsModel *model);

/**
 * Replaces the recovery law with a two-point law on `{low, high}`.
 *
 * # Safety
 * `model` must be a live handle.
 */
enum CdsStatus cds_model_set_two_point_recovery(struct CdsModel *model,
                                                double low,
                                                double high,
                                                double weight_low);

/**
 * No-arbitrage ask (least upper bound) and bid (greatest lower bound).
 *
 * # Safety
 * `model` must be a live handle; outputs must be valid pointers.
 */
enum CdsStatus cds_model_bounds(const struct CdsModel *model, double *v_lub, double *v_glb);

/**
 * Number of market quotes, the length `cds_model_hedge` needs.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t cds_model_quote_count(const struct CdsModel *model);

/**
 * Hedge notionals and deposit in LP convention (sign-flipped on the bid
 * side), as `alphas[0..len]` and `*deposit`.
 *
 * # Safety
 * `model` must be a live handle, `alphas` must hold `len` elements and
 * `deposit` must be valid.
 */
enum CdsStatus cds_model_hedge(const struct CdsModel *model,
                               enum CdsSide side,
                               double *alphas,
                               size_t len,
                               double *deposit);

/**
 * Expected PV of the hedged position under the physical measure.
 *
 * # Safety
 * `model` must be a live handle and `out` valid.
 */
enum CdsStatus cds_model_mean_pv(const struct CdsModel *model, enum CdsSide side, double *out);

/**
 * Good-deal bid and ask at expected return on capital at risk `r_t`.
 *
 * # Safety
 * `model` must be a live handle; outputs must be valid pointers.
 */
enum CdsStatus cds_model_gooddeal(const struct CdsModel *model,
                                  double r_t,
                                  double *bid,
                                  double *ask);

/**
 * Copies the calling thread's last error message, NUL-terminated and
 * truncated to fit, into `buf`. Returns the full message length in bytes
 * excluding the terminator; pass a null `buf` to query it.
 *
 * # Safety
 * `buf` must be null or hold `len` bytes.
 */
size_t cds_last_error_message(char *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CDSBOUNDS_H */
