#ifndef SLOWMIX_H
#define SLOWMIX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SlowmixStatus {
  SLOWMIX_STATUS_OK = 0,
  SLOWMIX_STATUS_NULL_POINTER = 1,
  SLOWMIX_STATUS_INVALID_UTF8 = 2,
  SLOWMIX_STATUS_PARSE_ERROR = 3,
  SLOWMIX_STATUS_INVALID_ARGUMENT = 4,
  SLOWMIX_STATUS_UNSUPPORTED = 5,
  SLOWMIX_STATUS_INFEASIBLE = 6,
  SLOWMIX_STATUS_PANIC = 7,
} SlowmixStatus;

/**
 * Opaque network handle.
 */
typedef struct SlowmixNetwork SlowmixNetwork;

typedef struct SlowmixTheta {
  uint64_t theta1;
  uint64_t theta2;
  uint64_t theta;
  bool assumptions_ok;
} SlowmixTheta;

typedef struct SlowmixFpt {
  double mean;
  double std_error;
  size_t reached;
  size_t capped;
  size_t absorbed;
} SlowmixFpt;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *slowmix_last_error(void);

/**
 * Static, NUL-terminated version string.
 */
const char *slowmix_version(void);

/**
 * Parses network text. On success `*out` holds a handle to release with
 * `slowmix_network_free`.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SlowmixStatus slowmix_network_parse(const char *text, struct SlowmixNetwork **out);

/**
 * # Safety
 * `net` must come from `slowmix_network_parse` and not be used afterwards.
 */
void slowmix_network_free(struct SlowmixNetwork *net);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void slowmix_string_free(char *s);

/**
 * Canonical text of the network.
 *
 * # Safety
 * `net` must be a live handle and `out` a valid pointer.
 */
enum SlowmixStatus slowmix_network_render(const struct SlowmixNetwork *net, char **out);

/**
 * # Safety
 * `net` must be a live handle; `species` and `reactions` valid pointers.
 */
enum SlowmixStatus slowmix_network_counts(const struct SlowmixNetwork *net,
                                          size_t *species,
                                          size_t *reactions);

/**
 * Mass-action propensity of reaction `r` at state `x[0..len]`.
 *
 * # Safety
 * `x` must point to `len` values and `out` be valid.
 */
enum SlowmixStatus slowmix_propensity(const struct SlowmixNetwork *net,
                                      size_t r,
                                      const uint64_t *x,
                                      size_t len,
                                      double *out);

/**
 * # Safety
 * As `slowmix_propensity`.
 */
enum SlowmixStatus slowmix_total_rate(const struct SlowmixNetwork *net,
                                      const uint64_t *x,
                                      size_t len,
                                      double *out);

/**
 * Escape exponents of a cyclic two-species network; `SLOWMIX_STATUS_UNSUPPORTED`
 * for other networks.
 *
 * # Safety
 * `net` must be a live handle and `out` valid.
 */
enum SlowmixStatus slowmix_theta_bounds(const struct SlowmixNetwork *net, struct SlowmixTheta *out);

/**
 * Exact probability that the embedded chain from `start` first follows the
 * reactions `labels`. Writes `"p/q"` to `*exact` (may be null to skip) and
 * its value to `*decimal`.
 *
 * # Safety
 * Arrays must hold `dim` and `n_labels` values; `labels` may be null when
 * `n_labels` is 0.
 */
enum SlowmixStatus slowmix_path_probability(const struct SlowmixNetwork *net,
                                            const uint64_t *start,
                                            size_t dim,
                                            const size_t *labels,
                                            size_t n_labels,
                                            char **exact,
                                            double *decimal);

/**
 * Mean first passage time over `m` trajectories to `{max_i x_i <= threshold}`
 * when `sup_norm` is true, else to `{x_coordinate <= threshold}`.
 *
 * # Safety
 * `init` must hold `dim` values and `out` be valid.
 */
enum SlowmixStatus slowmix_mean_first_passage(const struct SlowmixNetwork *net,
                                              const uint64_t *init,
                                              size_t dim,
                                              bool sup_norm,
                                              size_t coordinate,
                                              uint64_t threshold,
                                              size_t m,
                                              uint64_t seed,
                                              struct SlowmixFpt *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SLOWMIX_H */
