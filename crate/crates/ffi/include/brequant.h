#ifndef BREQUANT_H
#define BREQUANT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BqStatus {
  BQ_STATUS_OK = 0,
  BQ_STATUS_NULL_POINTER = 1,
  BQ_STATUS_INVALID_ARGUMENT = 2,
  BQ_STATUS_NOT_CONVERGED = 3,
  BQ_STATUS_NUMERICAL = 4,
  BQ_STATUS_BUFFER_TOO_SMALL = 5,
  BQ_STATUS_PANIC = 6,
} BqStatus;

/**
 * Opaque detection model.
 */
typedef struct BqModel BqModel;

/**
 * Opaque designed quantizer; owns a copy of its model.
 */
typedef struct BqQuantizer BqQuantizer;

typedef struct BqDesignOptions {
  /**
   * Stopping tolerance on parameter movement; 0 keeps the default.
   */
  double tol;
  /**
   * Iteration cap; 0 keeps the default.
   */
  size_t max_iter;
  /**
   * Number of starts; 0 keeps the default.
   */
  size_t multistart;
  uint64_t seed;
} BqDesignOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *bq_last_error_message(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *bq_version(void);

/**
 * Binary Gaussian shift model.
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum BqStatus bq_model_gaussian_new(double mu,
                                    double sigma2,
                                    double c10,
                                    double c01,
                                    struct BqModel **out);

/**
 * Ternary exponential-rate model with unit costs.
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum BqStatus bq_model_exponential_new(double lambda0,
                                       double lambda1,
                                       double lambda2,
                                       struct BqModel **out);

/**
 * # Safety
 * `model` must be null or a handle from `bq_model_*_new` not yet freed.
 */
void bq_model_free(struct BqModel *model);

/**
 * Number of hypotheses M, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live model handle.
 */
size_t bq_model_hypotheses(const struct BqModel *model);

/**
 * Bayes risk `J(p)`.
 *
 * # Safety
 * `model` must be live, `p` readable for `len` doubles, `out` writable.
 */
enum BqStatus bq_risk(const struct BqModel *model, const double *p, size_t len, double *out);

/**
 * Divergence `d(p || a)`; `a` must be interior.
 *
 * # Safety
 * `model` must be live, `p` and `a` readable for `len` doubles, `out` writable.
 */
enum BqStatus bq_divergence(const struct BqModel *model,
                            const double *p,
                            const double *a,
                            size_t len,
                            double *out);

/**
 * Single-cell minimax weight and its worst-case divergence.
 *
 * # Safety
 * `model` must be live, `weight_out` writable for `len` doubles and
 * `worst_out` writable.
 */
enum BqStatus bq_minimax_weight(const struct BqModel *model,
                                double *weight_out,
                                size_t len,
                                double *worst_out);

struct BqDesignOptions bq_design_options_default(void);

/**
 * Minimax quantizer with `k` cells. Returns `NotConverged` with `*out`
 * still set when the iteration cap was reached.
 *
 * # Safety
 * `model` must be live, `options` null or readable, `out` writable.
 */
enum BqStatus bq_design(const struct BqModel *model,
                        size_t k,
                        const struct BqDesignOptions *options,
                        struct BqQuantizer **out);

/**
 * # Safety
 * `q` must be null or a quantizer handle not yet freed.
 */
void bq_quantizer_free(struct BqQuantizer *q);

/**
 * Number of cells K, or 0 for a null handle.
 *
 * # Safety
 * `q` must be null or a live quantizer handle.
 */
size_t bq_quantizer_len(const struct BqQuantizer *q);

/**
 * Worst-case divergence recorded by the design.
 *
 * # Safety
 * `q` must be live and `out` writable.
 */
enum BqStatus bq_quantizer_max_divergence(const struct BqQuantizer *q, double *out);

/**
 * Decision weight of cell `k`.
 *
 * # Safety
 * `q` must be live and `out` writable for `len` doubles.
 */
enum BqStatus bq_quantizer_weight(const struct BqQuantizer *q, size_t k, double *out, size_t len);

/**
 * Cell index and decision weight for the prior `p`.
 *
 * # Safety
 * `q` must be live, `p` readable for `len` doubles, `cell_out` writable and
 * `weight_out` writable for `len` doubles.
 */
enum BqStatus bq_quantize(const struct BqQuantizer *q,
                          const double *p,
                          size_t len,
                          size_t *cell_out,
                          double *weight_out);

/**
 * Serialises the quantizer to JSON. Release the string with
 * `bq_string_free`.
 *
 * # Safety
 * `q` must be live and `out` writable.
 */
enum BqStatus bq_quantizer_to_json(const struct BqQuantizer *q, char **out);

/**
 * Reads a quantizer written by `bq_quantizer_to_json` or the CLI.
 *
 * # Safety
 * `json` must be a nul-terminated string and `out` writable.
 */
enum BqStatus bq_quantizer_from_json(const char *json, struct BqQuantizer **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void bq_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BREQUANT_H */
