#ifndef HEAVYSPEC_H
#define HEAVYSPEC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum HsStatus {
  HS_STATUS_OK = 0,
  HS_STATUS_NULL_POINTER = 1,
  HS_STATUS_INVALID_ARGUMENT = 2,
  HS_STATUS_OUT_OF_RANGE = 3,
  HS_STATUS_UNSUPPORTED = 4,
  HS_STATUS_NUMERICAL = 5,
  HS_STATUS_PARSE = 6,
  HS_STATUS_IO = 7,
  /**
   * The output buffer was too small; the required length was still written.
   */
  HS_STATUS_BUFFER_TOO_SMALL = 8,
  HS_STATUS_PANIC = 99,
} HsStatus;

/**
 * Noise distribution selector.
 */
typedef enum HsNoise {
  /**
   * Symmetric Pareto-type law; `param` is the tail index.
   */
  HS_NOISE_PARETO = 0,
  /**
   * Student t; `param` is the degrees of freedom.
   */
  HS_NOISE_STUDENT_T = 1,
  /**
   * `+-sqrt 3` with probability 1/6 each, 0 otherwise; `param` ignored.
   */
  HS_NOISE_THREE_POINT = 2,
  /**
   * Standard normal; `param` ignored.
   */
  HS_NOISE_NORMAL = 3,
} HsNoise;

/**
 * Coefficient array `h_kl` of a linear field.
 */
typedef struct HsCoeffs HsCoeffs;

/**
 * Tabulated Tracy–Widom F1.
 */
typedef struct HsTwTable HsTwTable;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *hs_version(void);

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call into the library from the same thread.
 */
const char *hs_last_error(void);

/**
 * `P(|Z| > x)` for the chosen noise.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum HsStatus hs_tail_prob(enum HsNoise kind, double param, double x, double *out);

/**
 * Normalizing constant `a_k` with `P(|Z| > a_k) = 1/k`.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum HsStatus hs_a_of(enum HsNoise kind, double param, uint64_t k, double *out);

/**
 * Builds a coefficient array from `len` triples `(k[i], l[i], h[i])`.
 *
 * # Safety
 * `k`, `l` and `h` must each point to `len` readable values; `out` must be
 * valid for one write.
 */
enum HsStatus hs_coeffs_new(const int64_t *k,
                            const int64_t *l,
                            const double *h,
                            size_t len,
                            struct HsCoeffs **out);

/**
 * Releases a coefficient array.
 *
 * # Safety
 * `c` must be NULL or a pointer returned by [`hs_coeffs_new`] not yet freed.
 */
void hs_coeffs_free(struct HsCoeffs *c);

/**
 * Descending singular values of `M(s) = H(0) H(s)'`.
 *
 * # Safety
 * `c` must be a live handle, `out` writable for `cap` values, `len` for one.
 */
enum HsStatus hs_coeffs_singular_values(const struct HsCoeffs *c,
                                        size_t lag,
                                        double *out,
                                        size_t cap,
                                        size_t *len);

/**
 * Simulates `X(0)` (`p x n`) from the field and writes the descending
 * eigenvalues of `X(0) X(0)'` divided by `a_np^2` (unnormalized for light
 * tails). Pass NULL coefficients for iid noise.
 *
 * # Safety
 * `c` must be NULL or a live handle, `out` writable for `cap` values, `len`
 * for one.
 */
enum HsStatus hs_simulate_eigenvalues(const struct HsCoeffs *c,
                                      enum HsNoise kind,
                                      double param,
                                      size_t p,
                                      size_t n,
                                      uint64_t seed,
                                      double *out,
                                      size_t cap,
                                      size_t *len);

/**
 * Descending eigenvalues of the symmetric `dim x dim` row-major matrix `a`.
 *
 * # Safety
 * `a` must hold `dim * dim` values and `out` room for `dim`.
 */
enum HsStatus hs_sym_eigenvalues(const double *a, size_t dim, double *out);

/**
 * Atom of the self-normalized gap limit: location `1 - v2/v1`, mass `(v2/v1)^{alpha/2}`.
 *
 * # Safety
 * `location` and `mass` must be valid for one write each.
 */
enum HsStatus hs_gap_atom(double alpha, double v1, double v2, double *location, double *mass);

/**
 * Evaluates a limit law given as JSON, e.g. `{"law": "frechet", "alpha_half": 0.8}`.
 * Densities are returned for Marčenko–Pastur, distribution functions otherwise.
 *
 * # Safety
 * `law_json` must be a NUL-terminated string and `out` valid for one write.
 */
enum HsStatus hs_law_eval(const char *law_json, double x, double *out);

/**
 * Tabulates F1 with Painlevé step `step`; `step <= 0` selects the shared
 * default table.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum HsStatus hs_tw_new(double step, struct HsTwTable **out);

/**
 * Releases a Tracy–Widom table.
 *
 * # Safety
 * `t` must be NULL or a pointer returned by [`hs_tw_new`] not yet freed.
 */
void hs_tw_free(struct HsTwTable *t);

/**
 * `F1(s)`; 0 below the table and the Airy-tail value above it.
 *
 * # Safety
 * `t` must be a live handle and `out` valid for one write.
 */
enum HsStatus hs_tw_cdf(const struct HsTwTable *t, double s, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HEAVYSPEC_H */
