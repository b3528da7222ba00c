#ifndef LEAR_FFI_H
#define LEAR_FFI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Violation bits reported by [`lear_validate_params`].
 */
#define LEAR_VIOLATION_SIGMA2_NOT_POSITIVE 1

#define LEAR_VIOLATION_RHO_NEGATIVE (1 << 1)

#define LEAR_VIOLATION_RHO_NOT_BELOW_ONE (1 << 2)

#define LEAR_VIOLATION_DELTA_NEGATIVE (1 << 3)

#define LEAR_VIOLATION_NON_FINITE (1 << 4)

/**
 * Boundary bits in [`LearFitSummary::boundary_flags`]. For ARMA(1,1) fits
 * the `RHO` bits refer to tau and the `DELTA` bits to rho_A.
 */
#define LEAR_BOUNDARY_RHO_AT_LOWER 1

#define LEAR_BOUNDARY_RHO_AT_UPPER_CAP (1 << 1)

#define LEAR_BOUNDARY_DELTA_AT_LOWER (1 << 2)

#define LEAR_BOUNDARY_DELTA_AT_UPPER_CAP (1 << 3)

typedef enum LearStatus {
  LEAR_STATUS_OK = 0,
  LEAR_STATUS_NULL_POINTER = 1,
  LEAR_STATUS_BUFFER_TOO_SMALL = 2,
  LEAR_STATUS_INVALID_UTF8 = 3,
  LEAR_STATUS_INVALID_GRID = 10,
  LEAR_STATUS_DEGENERATE_GRID = 11,
  LEAR_STATUS_INVALID_PARAMS = 12,
  LEAR_STATUS_INVALID_SIZE = 13,
  LEAR_STATUS_SUBJECT_OUT_OF_RANGE = 14,
  LEAR_STATUS_INVALID_DATA = 15,
  LEAR_STATUS_DEGENERATE_RANGE = 16,
  LEAR_STATUS_NOT_POSITIVE_DEFINITE = 20,
  LEAR_STATUS_RANK_DEFICIENT = 21,
  LEAR_STATUS_SINGULAR_FIT = 22,
  LEAR_STATUS_FIT_FAILED = 23,
  LEAR_STATUS_NOT_SPECIAL_CASE = 30,
  LEAR_STATUS_UNIDENTIFIABLE = 31,
  LEAR_STATUS_OUTSIDE_LEAR_IMAGE = 32,
  LEAR_STATUS_DUPLICATE_MEASUREMENT = 40,
  LEAR_STATUS_PARSE_ERROR = 41,
  LEAR_STATUS_CONFIG_ERROR = 42,
  LEAR_STATUS_IO_ERROR = 43,
  LEAR_STATUS_PANIC = 99,
} LearStatus;

typedef enum LearDesign {
  LEAR_DESIGN_INTERCEPT = 0,
  LEAR_DESIGN_INTERCEPT_TIME = 1,
} LearDesign;

typedef enum LearParameterization {
  LEAR_PARAMETERIZATION_LEAR = 0,
  LEAR_PARAMETERIZATION_ARMA11 = 1,
} LearParameterization;

typedef enum LearCriterion {
  LEAR_CRITERION_ML = 0,
  LEAR_CRITERION_REML = 1,
} LearCriterion;

/**
 * Opaque repeated-measures data set.
 */
typedef struct LearData LearData;

/**
 * Opaque measurement grid.
 */
typedef struct LearGrid LearGrid;

typedef struct LearFitOptions {
  size_t grid_points;
  double rho_cap;
  double rho_a_cap;
  /**
   * Upper bound for delta as a multiple of d_max - d_min.
   */
  double delta_cap;
  size_t max_iterations;
  double tolerance;
  bool widen_arma;
} LearFitOptions;

typedef struct LearModelParams {
  double sigma2;
  double rho_l;
  double delta;
} LearModelParams;

typedef struct LearArmaParams {
  double sigma2;
  double tau;
  double rho_a;
} LearArmaParams;

typedef struct LearSpecialCase {
  bool equally_spaced;
  bool integer_distances;
  bool dmin_is_one;
  bool eligible;
  /**
   * Common spacing, or NaN when the grid is not equally spaced.
   */
  double spacing;
} LearSpecialCase;

typedef struct LearFitSummary {
  enum LearParameterization parameterization;
  enum LearCriterion criterion;
  double sigma2;
  /**
   * rho_L or tau.
   */
  double first;
  /**
   * delta or rho_A.
   */
  double second;
  double max_loglik;
  bool converged;
  size_t iterations;
  size_t evaluations;
  uint32_t boundary_flags;
  bool in_lear_image;
} LearFitSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *lear_last_error_message(void);

/**
 * Built-in fit options.
 */
struct LearFitOptions lear_fit_options_default(void);

/**
 * Builds a grid from `n_subjects` time vectors stored back to back in
 * `times`; `lengths[i]` is the number of times of subject `i`.
 *
 * # Safety
 * `lengths` must point to `n_subjects` values, `times` to their sum, and
 * `out` to writable storage for one pointer.
 */
enum LearStatus lear_grid_new(const double *times,
                              const size_t *lengths,
                              size_t n_subjects,
                              struct LearGrid **out);

/**
 * Replaces the data-derived `d_min`/`d_max` with fixed values.
 *
 * # Safety
 * `grid` must be a live handle from [`lear_grid_new`].
 */
enum LearStatus lear_grid_set_extremes(struct LearGrid *grid, double d_min, double d_max);

/**
 * # Safety
 * `grid` must be NULL or a handle from [`lear_grid_new`] not yet freed.
 */
void lear_grid_free(struct LearGrid *grid);

/**
 * # Safety
 * `grid` must be a live handle.
 */
size_t lear_grid_n_subjects(const struct LearGrid *grid);

/**
 * Number of times of one subject; 0 for an invalid index.
 *
 * # Safety
 * `grid` must be a live handle.
 */
size_t lear_grid_subject_len(const struct LearGrid *grid, size_t subject);

/**
 * # Safety
 * `grid` must be a live handle; `d_min` and `d_max` writable.
 */
enum LearStatus lear_grid_extremes(const struct LearGrid *grid, double *d_min, double *d_max);

/**
 * Writes a bit set of `LEAR_VIOLATION_*` values; 0 means valid.
 *
 * # Safety
 * `out_flags` must be writable.
 */
enum LearStatus lear_validate_params(struct LearModelParams params, uint32_t *out_flags);

/**
 * LEAR covariance of one subject, row-major into `out` (`capacity` doubles).
 *
 * # Safety
 * `grid` must be a live handle and `out` must hold `capacity` doubles.
 */
enum LearStatus lear_covariance(const struct LearGrid *grid,
                                struct LearModelParams params,
                                size_t subject,
                                double *out,
                                size_t capacity);

/**
 * ARMA(1,1) covariance of dimension `p`, row-major into `out`.
 *
 * # Safety
 * `out` must hold `capacity` doubles.
 */
enum LearStatus lear_arma11_covariance(struct LearArmaParams params,
                                       size_t p,
                                       double *out,
                                       size_t capacity);

/**
 * # Safety
 * `grid` must be a live handle and `out` writable.
 */
enum LearStatus lear_check_special_case(const struct LearGrid *grid, struct LearSpecialCase *out);

/**
 * Maps LEAR parameters to ARMA(1,1) on an equally spaced grid.
 * `out_identifiable` may be NULL; it receives false when rho_A is arbitrary.
 *
 * # Safety
 * `grid` must be a live handle, `out` writable, `out_identifiable` NULL or writable.
 */
enum LearStatus lear_to_arma11(const struct LearGrid *grid,
                               struct LearModelParams params,
                               struct LearArmaParams *out,
                               bool *out_identifiable);

/**
 * Maps ARMA(1,1) parameters back to LEAR on an equally spaced grid.
 *
 * # Safety
 * `grid` must be a live handle and `out` writable.
 */
enum LearStatus lear_from_arma11(const struct LearGrid *grid,
                                 struct LearArmaParams params,
                                 struct LearModelParams *out);

/**
 * Builds a data set from back-to-back per-subject times and responses.
 *
 * # Safety
 * `lengths` must point to `n_subjects` values; `times` and `y` to their sum;
 * `out` writable.
 */
enum LearStatus lear_data_new(const double *times,
                              const double *y,
                              const size_t *lengths,
                              size_t n_subjects,
                              enum LearDesign design,
                              struct LearData **out);

/**
 * Reads long-format CSV with columns `subject,time,y` and an intercept-only design.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum LearStatus lear_data_from_csv(const char *path, struct LearData **out);

/**
 * Simulates a data set from a JSON simulation spec.
 *
 * # Safety
 * `spec_json` must be a NUL-terminated string and `out` writable.
 */
enum LearStatus lear_data_simulate(const char *spec_json, struct LearData **out);

/**
 * # Safety
 * `data` must be NULL or a live handle not yet freed.
 */
void lear_data_free(struct LearData *data);

/**
 * # Safety
 * `data` must be a live handle.
 */
size_t lear_data_n_subjects(const struct LearData *data);

/**
 * # Safety
 * `data` must be a live handle.
 */
size_t lear_data_n_obs(const struct LearData *data);

/**
 * Profile log-likelihood at (`first`, `second`): (rho_L, delta) or (tau, rho_A).
 *
 * # Safety
 * `data` must be a live handle and `out` writable.
 */
enum LearStatus lear_profile_loglik(const struct LearData *data,
                                    enum LearParameterization kind,
                                    double first,
                                    double second,
                                    enum LearCriterion crit,
                                    double *out);

/**
 * Fits one parameterization. `options` may be NULL for the defaults.
 *
 * # Safety
 * `data` must be a live handle, `options` NULL or valid, `out` writable.
 */
enum LearStatus lear_fit(const struct LearData *data,
                         enum LearParameterization kind,
                         enum LearCriterion crit,
                         const struct LearFitOptions *options,
                         struct LearFitSummary *out);

/**
 * Fits both parameterizations and returns the comparison report as a JSON
 * string owned by the caller (release with [`lear_string_free`]).
 *
 * # Safety
 * `data` must be a live handle, `options` NULL or valid, `out_json` writable.
 */
enum LearStatus lear_compare_json(const struct LearData *data,
                                  enum LearCriterion crit,
                                  const struct LearFitOptions *options,
                                  char **out_json);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void lear_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEAR_FFI_H */
