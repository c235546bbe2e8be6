#ifndef GTBR_H
#define GTBR_H

/* Generated by cbindgen from gtbr-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible `gtbr_*` call.
 */
typedef enum GtbrStatus {
  /**
   * The call succeeded.
   */
  GTBR_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  GTBR_STATUS_NULL_ARGUMENT = 1,
  /**
   * The regulator parameters are structurally invalid or outside the
   * comparison band.
   */
  GTBR_STATUS_INVALID_SPEC = 2,
  /**
   * A non-spec argument is out of range (bad index, short buffer
   * description, mismatched array length, ...).
   */
  GTBR_STATUS_INVALID_ARGUMENT = 3,
  /**
   * A resource limit tripped before the result was complete.
   */
  GTBR_STATUS_RESOURCE_LIMIT = 4,
  /**
   * Encoding or decoding failed (zero-capacity regulator, malformed or
   * tampered frames, oversized content, ...).
   */
  GTBR_STATUS_CODEC_FAILURE = 5,
  /**
   * The output buffer is too small; the call reported the required size.
   */
  GTBR_STATUS_BUFFER_TOO_SMALL = 6,
  /**
   * An internal invariant failed; the library state is unchanged.
   */
  GTBR_STATUS_INTERNAL = 7,
} GtbrStatus;

/**
 * Opaque handle to a completed envelope search.
 */
typedef struct GtbrOutcome GtbrOutcome;

/**
 * Opaque handle to a solved regulator: the spec plus its exact
 * information-weight tables.
 */
typedef struct GtbrSolution GtbrSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the error message of the most recent failed `gtbr_*` call on this
 * thread into `buffer` (NUL-terminated, truncating if needed).
 *
 * Returns the full message length including the NUL terminator, so a
 * return value larger than `capacity` means the copy was truncated. The
 * message is empty after a successful call.
 *
 * # Safety
 *
 * `buffer` must be valid for writes of `capacity` bytes, or null (the call
 * then only reports the required size).
 */
size_t gtbr_last_error(char *buffer, size_t capacity);

/**
 * Solves a generalized regulator given per-slot token increments
 * (`increment_count` slots) and per-boundary bucket depths
 * (`increment_count - 1` entries) and stores a handle in `out`.
 *
 * # Safety
 *
 * `increments` must point to `increment_count` readable `uint64_t`s,
 * `depths` to `depth_count` readable `uint64_t`s (either may be null when
 * its count is zero), and `out` must be valid for a pointer write. On `Ok`
 * the caller owns the handle and must release it with
 * [`gtbr_solution_free`].
 */
enum GtbrStatus gtbr_solution_new(const uint64_t *increments,
                                  size_t increment_count,
                                  const uint64_t *depths,
                                  size_t depth_count,
                                  struct GtbrSolution **out);

/**
 * Solves the standard regulator with `horizon` slots, constant rate `rate`,
 * and constant depth `depth`.
 *
 * # Safety
 *
 * `out` must be valid for a pointer write; on `Ok` the caller owns the
 * handle and must release it with [`gtbr_solution_free`].
 */
enum GtbrStatus gtbr_solution_new_uniform(size_t horizon,
                                          uint64_t rate,
                                          uint64_t depth,
                                          struct GtbrSolution **out);

/**
 * Releases a solution handle. Null is ignored.
 *
 * # Safety
 *
 * `solution` must be null or a handle obtained from a `gtbr_solution_new*`
 * call that has not already been freed.
 */
void gtbr_solution_free(struct GtbrSolution *solution);

/**
 * Number of slots of the solved regulator, or 0 if `solution` is null.
 *
 * # Safety
 *
 * `solution` must be null or a live handle.
 */
size_t gtbr_solution_horizon(const struct GtbrSolution *solution);

/**
 * Writes the information utility (max flow entropy, in bits) to `out`.
 *
 * # Safety
 *
 * `solution` must be a live handle and `out` valid for a `double` write.
 */
enum GtbrStatus gtbr_solution_utility_bits(const struct GtbrSolution *solution, double *out);

/**
 * Draws one packet-length schedule from the entropy-optimal policy and
 * writes it to `lengths`. The same seed always yields the same schedule.
 *
 * # Safety
 *
 * `solution` must be a live handle and `lengths` valid for
 * `length_count` `uint64_t` writes, where `length_count` equals the
 * regulator's horizon.
 */
enum GtbrStatus gtbr_solution_sample(const struct GtbrSolution *solution,
                                     uint64_t seed,
                                     uint64_t *lengths,
                                     size_t length_count);

/**
 * Searches the `(horizon, rate, depth)` envelope for the entropy-optimal
 * generalized regulator (equality depth mode, default depth window) and
 * stores a handle to the outcome in `out`.
 *
 * `relaxed` waives the `2r <= B <= 5r` comparison-band requirement.
 *
 * # Safety
 *
 * `out` must be valid for a pointer write; on `Ok` the caller owns the
 * handle and must release it with [`gtbr_outcome_free`].
 */
enum GtbrStatus gtbr_search_envelope(size_t horizon,
                                     uint64_t rate,
                                     uint64_t depth,
                                     bool relaxed,
                                     struct GtbrOutcome **out);

/**
 * Releases an outcome handle. Null is ignored.
 *
 * # Safety
 *
 * `outcome` must be null or a handle obtained from [`gtbr_search_envelope`]
 * that has not already been freed.
 */
void gtbr_outcome_free(struct GtbrOutcome *outcome);

/**
 * Writes the optimal utility `H_g*` (bits) to `out`.
 *
 * # Safety
 *
 * `outcome` must be a live handle and `out` valid for a `double` write.
 */
enum GtbrStatus gtbr_outcome_best_bits(const struct GtbrOutcome *outcome, double *out);

/**
 * Writes the standard-regulator baseline utility `H_s` (bits) to `out`.
 *
 * # Safety
 *
 * `outcome` must be a live handle and `out` valid for a `double` write.
 */
enum GtbrStatus gtbr_outcome_baseline_bits(const struct GtbrOutcome *outcome, double *out);

/**
 * Writes the relative improvement of `H_g*` over `H_s`, in percent, to
 * `out`.
 *
 * # Safety
 *
 * `outcome` must be a live handle and `out` valid for a `double` write.
 */
enum GtbrStatus gtbr_outcome_improvement_percent(const struct GtbrOutcome *outcome, double *out);

/**
 * Number of tied optimal parameter sequences, or 0 if `outcome` is null.
 *
 * # Safety
 *
 * `outcome` must be null or a live handle.
 */
size_t gtbr_outcome_optimum_count(const struct GtbrOutcome *outcome);

/**
 * Copies the `index`-th optimal parameter sequence into the caller's
 * arrays: `increments` receives the horizon per-slot token increments and
 * `depths` the `horizon - 1` bucket depths.
 *
 * # Safety
 *
 * `outcome` must be a live handle, `increments` valid for
 * `increment_count` `uint64_t` writes, and `depths` valid for `depth_count`
 * `uint64_t` writes (null allowed when `depth_count` is zero and the
 * horizon is 1).
 */
enum GtbrStatus gtbr_outcome_optimum(const struct GtbrOutcome *outcome,
                                     size_t index,
                                     uint64_t *increments,
                                     size_t increment_count,
                                     uint64_t *depths,
                                     size_t depth_count);

/**
 * Encodes the first `payload_bits` bits of `payload` (big-endian within
 * each byte) as a chained frame stream over the solved regulator, writing
 * the serialized stream to `out`.
 *
 * On [`GtbrStatus::BufferTooSmall`], `out_len` still reports the required
 * byte count, so an empty first call sizes the buffer.
 *
 * # Safety
 *
 * `payload` must point to `payload_len` readable bytes (null only when
 * `payload_len` is zero), `out` must be valid for `out_capacity` byte
 * writes (null only when `out_capacity` is zero), and `out_len` must be
 * valid for a `size_t` write.
 */
enum GtbrStatus gtbr_encode(const struct GtbrSolution *solution,
                            const uint8_t *payload,
                            size_t payload_len,
                            size_t payload_bits,
                            uint8_t *out,
                            size_t out_capacity,
                            size_t *out_len);

/**
 * Decodes a serialized chained frame stream, writing the recovered payload
 * bytes to `out` (the final byte zero-padded past `payload_bits`).
 *
 * On [`GtbrStatus::BufferTooSmall`], `out_len` still reports the required
 * byte count, so an empty first call sizes the buffer.
 *
 * # Safety
 *
 * `frames` must point to `frames_len` readable bytes, `out` must be valid
 * for `out_capacity` byte writes (null only when `out_capacity` is zero),
 * and `out_len` and `payload_bits` must each be valid for a `size_t` write.
 */
enum GtbrStatus gtbr_decode(const struct GtbrSolution *solution,
                            const uint8_t *frames,
                            size_t frames_len,
                            uint8_t *out,
                            size_t out_capacity,
                            size_t *out_len,
                            size_t *payload_bits);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GTBR_H */
