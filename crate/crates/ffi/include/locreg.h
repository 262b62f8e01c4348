#ifndef LOCREG_H
#define LOCREG_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every call.
 */
typedef enum LocregStatus {
  LOCREG_STATUS_OK = 0,
  LOCREG_STATUS_NULL_POINTER = 1,
  /**
   * The configuration is malformed or fails validation.
   */
  LOCREG_STATUS_CONFIG = 2,
  /**
   * A simulation or numerical routine failed.
   */
  LOCREG_STATUS_RUNTIME = 3,
  LOCREG_STATUS_INVALID_UTF8 = 4,
  /**
   * The output buffer is too small; nothing was written.
   */
  LOCREG_STATUS_BUFFER_TOO_SMALL = 5,
  LOCREG_STATUS_PANIC = 6,
} LocregStatus;

/**
 * Parsed experiment configuration.
 */
typedef struct LocregConfig LocregConfig;

/**
 * A steppable individual-based simulation.
 */
typedef struct LocregSimulation LocregSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf`.
 *
 * # Safety
 * `buf` must be valid for `len` bytes or null; `needed` must be valid or null.
 */
enum LocregStatus locreg_last_error(char *buf, size_t len, size_t *needed);

/**
 * Parses a JSON configuration (or run manifest).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum LocregStatus locreg_config_parse(const char *json, struct LocregConfig **out);

/**
 * # Safety
 * `cfg` must come from [`locreg_config_parse`] and not be used afterwards.
 */
void locreg_config_free(struct LocregConfig *cfg);

/**
 * Writes the validation report as JSON. Returns [`LocregStatus::Config`]
 * (with the report still written) when there are hard errors.
 *
 * # Safety
 * Pointers as for [`locreg_last_error`]; `cfg` must be a live handle.
 */
enum LocregStatus locreg_config_validate(const struct LocregConfig *cfg,
                                         char *buf,
                                         size_t len,
                                         size_t *needed);

/**
 * Runs the experiment, optionally redirecting output to `out_dir` and
 * overriding the seed when `seed_override` is non-null.
 *
 * # Safety
 * `cfg` must be a live handle; `out_dir` null or NUL-terminated;
 * `seed_override` null or valid.
 */
enum LocregStatus locreg_run(const struct LocregConfig *cfg,
                             const char *out_dir,
                             const uint64_t *seed_override);

/**
 * Growth rate of the mode with frequency `u` about the homogeneous
 * equilibrium of the configured one-dimensional model.
 *
 * # Safety
 * `cfg` must be a live handle and `out` valid for writes.
 */
enum LocregStatus locreg_growth_rate(const struct LocregConfig *cfg, double u, double *out);

/**
 * Creates a simulation of the configured model from `count` atoms placed
 * uniformly over the domain.
 *
 * # Safety
 * `cfg` must be a live handle and `out` valid for writes.
 */
enum LocregStatus locreg_simulation_new(const struct LocregConfig *cfg,
                                        size_t count,
                                        uint64_t seed,
                                        struct LocregSimulation **out);

/**
 * # Safety
 * `sim` must come from [`locreg_simulation_new`] and not be used afterwards.
 */
void locreg_simulation_free(struct LocregSimulation *sim);

/**
 * Advances by `steps` discrete steps of length `dt`.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum LocregStatus locreg_simulation_step(struct LocregSimulation *sim, double dt, size_t steps);

/**
 * Current time, atom count and total mass (any output may be null).
 *
 * # Safety
 * `sim` must be a live handle; outputs null or valid.
 */
enum LocregStatus locreg_simulation_state(const struct LocregSimulation *sim,
                                          double *time,
                                          size_t *count,
                                          double *mass);

/**
 * Copies atom coordinates (row-major, `count × dim`) into `buf`.
 * `needed` receives the number of doubles required.
 *
 * # Safety
 * `sim` must be a live handle; `buf` valid for `len` doubles or null.
 */
enum LocregStatus locreg_simulation_positions(const struct LocregSimulation *sim,
                                              double *buf,
                                              size_t len,
                                              size_t *needed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOCREG_H */
