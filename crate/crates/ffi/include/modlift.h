#ifndef MODLIFT_H
#define MODLIFT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ModliftStatus {
  MODLIFT_STATUS_OK = 0,
  MODLIFT_STATUS_INVALID_INPUT = 1,
  MODLIFT_STATUS_TRUNCATION = 2,
  MODLIFT_STATUS_PRECISION = 3,
  MODLIFT_STATUS_CONVERGENCE = 4,
  MODLIFT_STATUS_CACHE = 5,
  MODLIFT_STATUS_IO = 6,
  MODLIFT_STATUS_NULL_POINTER = 7,
  MODLIFT_STATUS_PANIC = 8,
} ModliftStatus;

/**
 * Opaque trace table.
 */
typedef struct ModliftTable ModliftTable;

typedef struct ModliftComplex {
  double re;
  double im;
} ModliftComplex;

/**
 * Lift value split as in the Fourier expansion.
 */
typedef struct ModliftLift {
  struct ModliftComplex smooth_part;
  struct ModliftComplex singular_part;
  struct ModliftComplex total;
  /**
   * Number of forms whose bounded component contains the point.
   */
  size_t n_forms;
  /**
   * Number of Fourier terms used.
   */
  size_t terms;
} ModliftLift;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *modlift_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *modlift_version(void);

/**
 * Schema version of trace table files.
 */
uint32_t modlift_cache_schema_version(void);

/**
 * New empty in-memory table. Free with [`modlift_table_free`].
 */
struct ModliftTable *modlift_table_new(void);

/**
 * Opens (or starts) the table stored at `path`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum ModliftStatus modlift_table_open(const char *path, struct ModliftTable **out);

/**
 * # Safety
 * `t` must come from [`modlift_table_new`] or [`modlift_table_open`] and not be used afterwards.
 */
void modlift_table_free(struct ModliftTable *t);

/**
 * Number of stored traces.
 *
 * # Safety
 * `t` must be a live table.
 */
enum ModliftStatus modlift_table_len(const struct ModliftTable *t, size_t *out);

/**
 * Writes the table as JSON to `path`.
 *
 * # Safety
 * `t` must be a live table and `path` a NUL-terminated string.
 */
enum ModliftStatus modlift_table_save(const struct ModliftTable *t, const char *path);

/**
 * CM trace of `J` over discriminant `disc < 0`.
 *
 * # Safety
 * `out` must be writable.
 */
enum ModliftStatus modlift_trace_cm(int64_t disc, double *out);

/**
 * Cycle trace of `J_m` over discriminant `disc > 0`; `m = 0` is the constant function 1.
 *
 * # Safety
 * `t` must be a live table and `out` writable.
 */
enum ModliftStatus modlift_trace_cycle(const struct ModliftTable *t,
                                       size_t m,
                                       int64_t disc,
                                       double *out);

/**
 * The lift of `h` twisted by `delta` at `z`.
 *
 * # Safety
 * `t` must be a live table and `out` writable.
 */
enum ModliftStatus modlift_eval_phi(const struct ModliftTable *t,
                                    int64_t delta,
                                    struct ModliftComplex z,
                                    size_t trunc,
                                    double tol,
                                    struct ModliftLift *out);

/**
 * The derivative of the lift at `z`.
 *
 * # Safety
 * `t` must be a live table and `out` writable.
 */
enum ModliftStatus modlift_eval_phi_prime(const struct ModliftTable *t,
                                          int64_t delta,
                                          struct ModliftComplex z,
                                          size_t trunc,
                                          double tol,
                                          struct ModliftLift *out);

/**
 * The modular integral `F_Delta(z)`.
 *
 * # Safety
 * `t` must be a live table and `out` writable.
 */
enum ModliftStatus modlift_eval_f(const struct ModliftTable *t,
                                  int64_t delta,
                                  struct ModliftComplex z,
                                  size_t trunc,
                                  double tol,
                                  struct ModliftComplex *out);

/**
 * The Borcherds product: its logarithm (principal branches termwise) and value.
 *
 * # Safety
 * `t` must be a live table; `out_log` and `out_value` writable.
 */
enum ModliftStatus modlift_eval_product(const struct ModliftTable *t,
                                        int64_t delta,
                                        struct ModliftComplex z,
                                        size_t trunc,
                                        double tol,
                                        struct ModliftComplex *out_log,
                                        struct ModliftComplex *out_value);

/**
 * `sum 1/Q(z,1)` over forms of discriminant `delta` with `c < 0 < a`.
 *
 * # Safety
 * `out` must be writable.
 */
enum ModliftStatus modlift_period_qs(int64_t delta,
                                     struct ModliftComplex z,
                                     struct ModliftComplex *out);

/**
 * The weight-0 cocycle attached to `S`, vanishing at `i`.
 *
 * # Safety
 * `out` must be writable.
 */
enum ModliftStatus modlift_cocycle_rs(int64_t delta,
                                      struct ModliftComplex z,
                                      struct ModliftComplex *out);

/**
 * Genus character `chi_delta([a, b, c])`.
 *
 * # Safety
 * `out` must be writable.
 */
enum ModliftStatus modlift_genus_character(int64_t delta,
                                           int64_t a,
                                           int64_t b,
                                           int64_t c,
                                           int32_t *out);

/**
 * Runs a verification suite (`"period"`, `"product"`, `"jump"`, `"continuity"`,
 * `"traceid"` or `"all"`); `delta = 0` selects the default discriminants.
 * Writes the number of checks and of failed checks.
 *
 * # Safety
 * `t` must be a live table, `suite` NUL-terminated, the outputs writable.
 */
enum ModliftStatus modlift_verify(const struct ModliftTable *t,
                                  const char *suite,
                                  int64_t delta,
                                  size_t *out_checks,
                                  size_t *out_failed);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* MODLIFT_H */
