#ifndef GIETLAB_H
#define GIETLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum GietlabStatus {
  GIETLAB_STATUS_OK = 0,
  GIETLAB_STATUS_NULL_POINTER = 1,
  GIETLAB_STATUS_INVALID_ARGUMENT = 2,
  GIETLAB_STATUS_CONFIG = 3,
  GIETLAB_STATUS_NUMERICAL = 4,
  GIETLAB_STATUS_CONSISTENCY = 5,
  GIETLAB_STATUS_IO = 6,
  GIETLAB_STATUS_PANIC = 7,
} GietlabStatus;

/**
 * A generalised interval exchange map.
 */
typedef struct GietlabMap GietlabMap;

/**
 * A fixed point of renormalisation together with its loop and splitting.
 */
typedef struct GietlabSystem GietlabSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL. Valid until the next failing call.
 */
const char *gietlab_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *gietlab_version(void);

/**
 * Builds a system from a one-based permutation and a loop literal over `t`/`b`.
 *
 * # Safety
 * `permutation` must point to `d` readable values, `loop_literal` must be a
 * NUL-terminated string and `out_system` must be writable.
 */
enum GietlabStatus gietlab_system_new(const size_t *permutation,
                                      size_t d,
                                      const char *loop_literal,
                                      size_t grid_size,
                                      struct GietlabSystem **out_system);

/**
 * Builds a named preset system, `"golden"` or `"d4"`.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out_system` must be writable.
 */
enum GietlabStatus gietlab_system_preset(const char *name,
                                         size_t grid_size,
                                         struct GietlabSystem **out_system);

/**
 * # Safety
 * `system` must be NULL or a handle from this library that has not been freed.
 */
void gietlab_system_free(struct GietlabSystem *system);

/**
 * Number of intervals, or 0 for NULL.
 *
 * # Safety
 * `system` must be NULL or a live handle.
 */
size_t gietlab_system_d(const struct GietlabSystem *system);

/**
 * Perron eigenvalue of the loop matrix.
 *
 * # Safety
 * `system` must be a live handle and `out_value` writable.
 */
enum GietlabStatus gietlab_system_perron(const struct GietlabSystem *system, double *out_value);

/**
 * A copy of the fixed point `T₀` of the system.
 *
 * # Safety
 * `system` must be a live handle and `out_map` writable.
 */
enum GietlabStatus gietlab_system_reference_map(const struct GietlabSystem *system,
                                                struct GietlabMap **out_map);

/**
 * Shoots along the stable manifold from a random slice point at `radius`.
 * Writes the shadowing map and the depth reached.
 *
 * # Safety
 * `system` must be a live handle; `out_map` and `out_depth` must be writable.
 */
enum GietlabStatus gietlab_shoot(const struct GietlabSystem *system,
                                 uint64_t seed,
                                 double radius,
                                 size_t depth,
                                 struct GietlabMap **out_map,
                                 size_t *out_depth);

/**
 * # Safety
 * `map` must be NULL or a handle from this library that has not been freed.
 */
void gietlab_map_free(struct GietlabMap *map);

/**
 * `T(x)` and the branch containing `x`.
 *
 * # Safety
 * `map` must be a live handle; `out_value` must be writable; `out_branch` may be NULL.
 */
enum GietlabStatus gietlab_map_eval(const struct GietlabMap *map,
                                    double x,
                                    double *out_value,
                                    size_t *out_branch);

/**
 * Copies the top interval lengths into `buf`, which must hold `gietlab_map_d` values.
 *
 * # Safety
 * `map` must be a live handle and `buf` must point to `len` writable values.
 */
enum GietlabStatus gietlab_map_lengths(const struct GietlabMap *map, double *buf, size_t len);

/**
 * Number of intervals, or 0 for NULL.
 *
 * # Safety
 * `map` must be NULL or a live handle.
 */
size_t gietlab_map_d(const struct GietlabMap *map);

/**
 * `Rⁿ(map)` along the system's loop.
 *
 * # Safety
 * Both handles must be live and `out_map` writable.
 */
enum GietlabStatus gietlab_map_renormalize(const struct GietlabSystem *system,
                                           const struct GietlabMap *map,
                                           size_t n,
                                           struct GietlabMap **out_map);

/**
 * `d_{Cʳ}(a, b)` for `r` in 0..=3.
 *
 * # Safety
 * Both handles must be live and `out_value` writable.
 */
enum GietlabStatus gietlab_map_distance(const struct GietlabMap *a,
                                        const struct GietlabMap *b,
                                        size_t r,
                                        double *out_value);

/**
 * Runs experiment `experiment` (`"E1"`..`"E8"`) on a JSON configuration and writes the
 * summary JSON to `out_summary` (free with [`gietlab_string_free`]) and the exit code.
 * A failed run still returns `Ok` with a nonzero exit code; only rejected input fails.
 *
 * # Safety
 * Strings must be NUL-terminated; `config_json` may be NULL for defaults; outputs must be writable.
 */
enum GietlabStatus gietlab_run_experiment(const char *experiment,
                                          const char *config_json,
                                          char **out_summary,
                                          int32_t *out_exit_code);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library that has not been freed.
 */
void gietlab_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GIETLAB_H */
