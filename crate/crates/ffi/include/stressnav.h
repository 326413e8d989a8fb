#ifndef STRESSNAV_H
#define STRESSNAV_H

/* Generated at build time; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum sn_status {
  SN_STATUS_OK = 0,
  SN_STATUS_NULL_POINTER = 1,
  SN_STATUS_INVALID_ARGUMENT = 2,
  SN_STATUS_PARSE_ERROR = 3,
  SN_STATUS_CONFIG_ERROR = 4,
  SN_STATUS_INVALID_GEOMETRY = 5,
  SN_STATUS_GEOMETRY_VIOLATION = 6,
  SN_STATUS_NUMERICAL_FAILURE = 7,
  SN_STATUS_MODEL_INCOMPATIBLE = 8,
  SN_STATUS_PANIC = 9,
} sn_status;

/**
 * Opaque handle to a set of estimator models.
 */
typedef struct SnModels SnModels;

/**
 * Opaque scenario handle.
 */
typedef struct SnScenario SnScenario;

/**
 * Opaque handle to a solved flow.
 */
typedef struct SnSolution SnSolution;

/**
 * Rigid motion of the robot: µm/s and rad/s (counterclockwise positive).
 */
typedef struct SnMotion {
  double vx;
  double vy;
  double omega;
} SnMotion;

/**
 * Estimates from a reading pair. Quantities that could not be estimated
 * are NaN; `flags` counts the diagnostics raised.
 */
typedef struct SnEstimate {
  double wall_direction;
  double motion_direction;
  double relpos;
  double diameter;
  double wall_distance;
  double angular_velocity;
  double speed_ratio;
  double speed;
  double correlation;
  bool in_range;
  uint32_t flags;
} SnEstimate;

/**
 * Sensor design for the noise formulas, SI units.
 */
typedef struct SnSensorDesign {
  double size;
  double time;
  double damping;
  double coverage;
  uint32_t count;
  double stress;
} SnSensorDesign;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message on this thread into `buf` (NUL
 * terminated, truncated to fit) and returns the full message length.
 *
 * # Safety
 * `buf` must point to `len` writable bytes, or be null with `len` 0.
 */
size_t sn_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sn_version(void);

/**
 * Parses a scenario from JSON.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum sn_status sn_scenario_from_json(const char *json, struct SnScenario **out);

/**
 * The bundled example scenario.
 *
 * # Safety
 * `out` must be writable.
 */
enum sn_status sn_scenario_table2(struct SnScenario **out);

/**
 * Moves the robot center and orientation (µm, rad).
 *
 * # Safety
 * `scenario` must be a live handle.
 */
enum sn_status sn_scenario_set_pose(struct SnScenario *scenario, double x, double y, double psi);

/**
 * # Safety
 * `scenario` must be null or a handle not yet freed.
 */
void sn_scenario_free(struct SnScenario *scenario);

/**
 * Solves the flow at the default discretization.
 *
 * # Safety
 * `scenario` must be a live handle; `out` must be writable.
 */
enum sn_status sn_solve(const struct SnScenario *scenario, struct SnSolution **out);

/**
 * # Safety
 * `solution` must be a live handle; `out` must be writable.
 */
enum sn_status sn_solution_motion(const struct SnSolution *solution, struct SnMotion *out);

/**
 * Samples `n` evenly spaced sensors (Pa). Normal components are
 * gauge-normalized to sum to zero.
 *
 * # Safety
 * `normal` and `tangential` must each point to `n` writable doubles.
 */
enum sn_status sn_solution_reading(const struct SnSolution *solution,
                                   size_t n,
                                   double *normal,
                                   double *tangential);

/**
 * # Safety
 * `solution` must be null or a handle not yet freed.
 */
void sn_solution_free(struct SnSolution *solution);

/**
 * The bundled reference models.
 *
 * # Safety
 * `out` must be writable.
 */
enum sn_status sn_models_reference(struct SnModels **out);

/**
 * Loads models written by the training pipeline.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum sn_status sn_models_from_json(const char *json, struct SnModels **out);

/**
 * # Safety
 * `models` must be null or a handle not yet freed.
 */
void sn_models_free(struct SnModels *models);

/**
 * Runs every estimator on two readings of `n` sensors taken `dt` seconds
 * apart by a circular robot of radius `radius` (µm). Geometry refers to
 * the first reading.
 *
 * # Safety
 * The four arrays must each hold `n` doubles; `out` must be writable.
 */
enum sn_status sn_estimate(const struct SnModels *models,
                           size_t n,
                           const double *normal_a,
                           const double *tangential_a,
                           const double *normal_b,
                           const double *tangential_b,
                           double dt,
                           double radius,
                           struct SnEstimate *out);

/**
 * Single-sensor SNR at temperature `temperature` (K) and viscosity
 * `viscosity` (Pa·s).
 *
 * # Safety
 * `d` must point to a design; `out` must be writable.
 */
enum sn_status sn_snr_single(const struct SnSensorDesign *d,
                             double temperature,
                             double viscosity,
                             double *out);

/**
 * SNR of the sensor-array Fourier combinations for a robot of radius
 * `radius` (m).
 *
 * # Safety
 * `d` must point to a design; `out` must be writable.
 */
enum sn_status sn_snr_array(const struct SnSensorDesign *d,
                            double radius,
                            double temperature,
                            double viscosity,
                            double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STRESSNAV_H */
