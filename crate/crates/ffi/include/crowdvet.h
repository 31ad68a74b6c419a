#ifndef CROWDVET_H
#define CROWDVET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Role codes for [`cv_world_from_edges`].
 */
#define CV_ROLE_LEGITIMATE 0

#define CV_ROLE_SPAWNING 1

#define CV_ROLE_SPOOFED 2

#define CV_ROLE_HIDDEN 3

/**
 * Trust entry codes returned by [`cv_trust_entry`].
 */
#define CV_TRUST 1

#define CV_DISTRUST 0

#define CV_NO_DATA -1

/**
 * Result of every fallible call.
 */
typedef enum CvStatus {
  CV_STATUS_OK = 0,
  CV_STATUS_NULL_POINTER = 1,
  CV_STATUS_INVALID_INPUT = 2,
  CV_STATUS_DOMAIN = 3,
  CV_STATUS_CONTRACT = 4,
  CV_STATUS_RANK_DEFICIENT = 5,
  CV_STATUS_FLOOD_STALLED = 6,
  CV_STATUS_SINGULARITY = 7,
  CV_STATUS_INFEASIBLE_TRACKING = 8,
  CV_STATUS_UNSTABLE = 9,
  CV_STATUS_CONFIG = 10,
  CV_STATUS_IO = 11,
  CV_STATUS_PANIC = 12,
} CvStatus;

/**
 * Final trust vectors of every legitimate robot.
 */
typedef struct CvTrust CvTrust;

/**
 * A communication graph with roles and an observation channel.
 */
typedef struct CvWorld CvWorld;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *cv_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cv_version(void);

/**
 * Loads a named fixture such as `"fig3"` or `"complete(l=10,h=5,s=100)"`.
 * `epsilon = 0.5` selects a perfect channel.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CvStatus cv_world_from_fixture(const char *name, double epsilon, struct CvWorld **out);

/**
 * Builds a world from `edge_count` pairs in `edges` (length `2·edge_count`)
 * and `n` role codes. Spoofed robots are assigned to spawners round-robin.
 *
 * # Safety
 * `edges` must point to `2·edge_count` values, `roles` to `n` values and
 * `out` must be valid.
 */
enum CvStatus cv_world_from_edges(uintptr_t n,
                                  const uintptr_t *edges,
                                  uintptr_t edge_count,
                                  const uint8_t *roles,
                                  double epsilon,
                                  struct CvWorld **out);

/**
 * # Safety
 * `world` must come from a `cv_world_*` constructor or be null.
 */
void cv_world_free(struct CvWorld *world);

/**
 * Number of robots.
 *
 * # Safety
 * `world` must be a live handle or null (returns 0).
 */
uintptr_t cv_world_size(const struct CvWorld *world);

/**
 * # Safety
 * `world` must be a live handle and `out` valid.
 */
enum CvStatus cv_world_min_tau(const struct CvWorld *world, int64_t *out);

/**
 * Second-smallest Laplacian eigenvalue of the full graph.
 *
 * # Safety
 * `world` must be a live handle and `out` valid.
 */
enum CvStatus cv_world_algebraic_connectivity(const struct CvWorld *world, double *out);

/**
 * # Safety
 * `out` must be valid.
 */
enum CvStatus cv_rounds_bound_theorem1(uintptr_t l,
                                       uintptr_t n,
                                       double epsilon,
                                       int64_t tau,
                                       uintptr_t d_l,
                                       double delta,
                                       uintptr_t *out);

/**
 * # Safety
 * `out` must be valid.
 */
enum CvStatus cv_rounds_bound_baseline(double delta, double epsilon, uintptr_t *out);

/**
 * Runs `rounds` observation rounds, the vector exchange and the vote with
 * randomness from `seed`.
 *
 * # Safety
 * `world` must be a live handle and `out` valid.
 */
enum CvStatus cv_find_spoofed_robots(const struct CvWorld *world,
                                     uintptr_t rounds,
                                     uint64_t seed,
                                     struct CvTrust **out);

/**
 * # Safety
 * `trust` must come from [`cv_find_spoofed_robots`] or be null.
 */
void cv_trust_free(struct CvTrust *trust);

/**
 * Entry `target` of `owner`'s final vector as `CV_TRUST`, `CV_DISTRUST` or
 * `CV_NO_DATA`. `owner` must be legitimate.
 *
 * # Safety
 * `trust` must be a live handle and `out` valid.
 */
enum CvStatus cv_trust_entry(const struct CvTrust *trust,
                             uintptr_t owner,
                             uintptr_t target,
                             int32_t *out);

/**
 * Whether every legitimate robot's vector equals ground truth.
 *
 * # Safety
 * Both handles must be live, from the same world, and `out` valid.
 */
enum CvStatus cv_trust_all_correct(const struct CvTrust *trust,
                                   const struct CvWorld *world,
                                   bool *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CROWDVET_H */
