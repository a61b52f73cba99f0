#ifndef BCDIST_H
#define BCDIST_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a call.
 */
typedef enum BcdistStatus {
  BCDIST_STATUS_OK = 0,
  BCDIST_STATUS_NULL_POINTER = 1,
  BCDIST_STATUS_INVALID_UTF8 = 2,
  BCDIST_STATUS_INVALID_INPUT = 3,
  BCDIST_STATUS_NUMERICAL = 4,
  BCDIST_STATUS_PANIC = 5,
} BcdistStatus;

/**
 * Opaque distribution handle.
 */
typedef struct BcdistDistribution BcdistDistribution;

/**
 * Bhattacharyya coefficient, distance and coefficient error estimate.
 */
typedef struct BcdistDivergence {
  double coefficient;
  double distance;
  double error_estimate;
} BcdistDivergence;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses and validates a distribution from JSON.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer. On
 * success `*out` owns a handle to be released with
 * [`bcdist_distribution_free`].
 */
enum BcdistStatus bcdist_distribution_from_json(const char *json, struct BcdistDistribution **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `d` must come from [`bcdist_distribution_from_json`] and not be used again.
 */
void bcdist_distribution_free(struct BcdistDistribution *d);

/**
 * Dimension of the distribution (category count for discrete ones).
 *
 * # Safety
 * `d` must be a live handle and `out` a valid pointer.
 */
enum BcdistStatus bcdist_distribution_dim(const struct BcdistDistribution *d, size_t *out);

/**
 * JSON form of a handle, or null on failure. Free with [`bcdist_string_free`].
 *
 * # Safety
 * `d` must be a live handle.
 */
char *bcdist_distribution_to_json(const struct BcdistDistribution *d);

/**
 * Bhattacharyya distance between two handles. `seed` drives the
 * randomized rectangle-probability rule used by truncated multivariate
 * distributions and is ignored otherwise.
 *
 * # Safety
 * `p`, `q` must be live handles and `out` a valid pointer.
 */
enum BcdistStatus bcdist_distance(const struct BcdistDistribution *p,
                                  const struct BcdistDistribution *q,
                                  uint64_t seed,
                                  struct BcdistDivergence *out);

/**
 * Closed-form distance between `N(mu_p, var_p)` and `N(mu_q, var_q)`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum BcdistStatus bcdist_normal_distance(double mu_p,
                                         double var_p,
                                         double mu_q,
                                         double var_q,
                                         double *out);

/**
 * Smallest projection dimension for `n` points at distortion `epsilon`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum BcdistStatus bcdist_jl_min_dimension(size_t n, double epsilon, size_t *out);

/**
 * Copy of the last error message on this thread, or null when none.
 * Free with [`bcdist_string_free`].
 */
char *bcdist_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used again.
 */
void bcdist_string_free(char *s);

/**
 * Library version, a static string.
 */
const char *bcdist_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BCDIST_H */
