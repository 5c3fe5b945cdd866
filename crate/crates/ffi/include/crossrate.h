#ifndef CROSSRATE_H
#define CROSSRATE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CrossrateStatus {
  CROSSRATE_STATUS_OK = 0,
  CROSSRATE_STATUS_NULL_POINTER = 1,
  CROSSRATE_STATUS_INVALID_ARGUMENT = 2,
  CROSSRATE_STATUS_CONFIG = 3,
  CROSSRATE_STATUS_DOMAIN = 4,
  CROSSRATE_STATUS_NUMERICAL = 5,
  CROSSRATE_STATUS_QUADRATURE = 6,
  CROSSRATE_STATUS_CONVERGENCE = 7,
  CROSSRATE_STATUS_PANIC = 8,
} CrossrateStatus;

typedef enum CrossrateMethod {
  CROSSRATE_METHOD_QUADRATURE = 0,
  CROSSRATE_METHOD_TAYLOR0 = 1,
  CROSSRATE_METHOD_TAYLOR1_INV = 2,
  CROSSRATE_METHOD_TAYLOR1_COV = 3,
} CrossrateMethod;

/**
 * Opaque scenario handle.
 */
typedef struct CrossrateScenario CrossrateScenario;

/**
 * Entry intensity at one time; segments ordered front, right, left, rear.
 */
typedef struct CrossrateRate {
  double t;
  double mu_total;
  double mu_segment[4];
  /**
   * Segments whose closed-form value was clamped to zero.
   */
  uint32_t clamped;
} CrossrateRate;

/**
 * Collision probability upper bound over `[t1, t2]`.
 */
typedef struct CrossrateBound {
  double t1;
  double t2;
  double p_upper;
  double p_upper_capped;
  double p_segment[4];
  size_t evaluations;
} CrossrateBound;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *crossrate_version(void);

/**
 * Message of the last failed call on this thread. Valid until the next
 * failing call on the same thread; empty when nothing failed yet.
 */
const char *crossrate_last_error(void);

/**
 * Creates a scenario from a preset name (`"front"` or `"front-right"`).
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a writable pointer.
 */
enum CrossrateStatus crossrate_scenario_from_preset(const char *name,
                                                    struct CrossrateScenario **out);

/**
 * Creates a scenario from a TOML document.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a writable pointer.
 */
enum CrossrateStatus crossrate_scenario_from_toml(const char *toml, struct CrossrateScenario **out);

/**
 * Releases a scenario. Null is ignored.
 *
 * # Safety
 * `scenario` must come from a constructor of this library and not be used
 * afterwards.
 */
void crossrate_scenario_free(struct CrossrateScenario *scenario);

/**
 * Prediction horizon of the scenario, s (NaN for a null handle).
 *
 * # Safety
 * `scenario` must be null or a live handle.
 */
double crossrate_scenario_horizon(const struct CrossrateScenario *scenario);

/**
 * Entry intensity at time `t`.
 *
 * # Safety
 * `scenario` must be a live handle and `out` writable.
 */
enum CrossrateStatus crossrate_intensity(const struct CrossrateScenario *scenario,
                                         double t,
                                         enum CrossrateMethod method,
                                         struct CrossrateRate *out);

/**
 * Upper bound over `[t1, t2]` from a uniform grid with step `dt` over the
 * scenario horizon.
 *
 * # Safety
 * `scenario` must be a live handle and `out` writable.
 */
enum CrossrateStatus crossrate_probability_bound(const struct CrossrateScenario *scenario,
                                                 enum CrossrateMethod method,
                                                 double dt,
                                                 double t1,
                                                 double t2,
                                                 struct CrossrateBound *out);

/**
 * Upper bound over `[t1, t2]` from adaptive sampling seeded with the
 * deterministic crossing times.
 *
 * # Safety
 * `scenario` must be a live handle and `out` writable.
 */
enum CrossrateStatus crossrate_adaptive_bound(const struct CrossrateScenario *scenario,
                                              enum CrossrateMethod method,
                                              double dt1,
                                              double dt2,
                                              double rate_floor,
                                              double t1,
                                              double t2,
                                              struct CrossrateBound *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CROSSRATE_H */
