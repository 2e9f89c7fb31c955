#ifndef TFW_H
#define TFW_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum TfwStatus {
  TFW_STATUS_OK = 0,
  TFW_STATUS_NULL_POINTER = 1,
  TFW_STATUS_INVALID_ARGUMENT = 2,
  TFW_STATUS_GRID_MISMATCH = 3,
  TFW_STATUS_INVALID_MODEL = 4,
  TFW_STATUS_SCF_DIVERGED = 5,
  TFW_STATUS_SCF_NOT_CONVERGED = 6,
  TFW_STATUS_EIGENSOLVER_STALLED = 7,
  TFW_STATUS_NUMERICAL_ERROR = 8,
  TFW_STATUS_PANIC = 9,
} TfwStatus;

/**
 * Which grid function of a result to copy.
 */
typedef enum TfwFieldKind {
  TFW_FIELD_KIND_DENSITY = 0,
  TFW_FIELD_KIND_AMPLITUDE = 1,
  TFW_FIELD_KIND_POTENTIAL = 2,
} TfwFieldKind;

/**
 * Uniform grid over a cell.
 */
typedef struct TfwGrid TfwGrid;

/**
 * Nuclear density model.
 */
typedef struct TfwModel TfwModel;

/**
 * Homogenization study report.
 */
typedef struct TfwReport TfwReport;

/**
 * Converged ground state.
 */
typedef struct TfwResult TfwResult;

/**
 * SCF parameters. Obtain defaults from [`tfw_scf_config_default`].
 */
typedef struct TfwScfConfig {
  double tolerance;
  size_t max_iterations;
  double mixing;
  size_t anderson_depth;
  bool energy_safeguard;
  double eigensolver_tol;
  size_t eigensolver_max_iter;
  double kinetic_exponent;
  double potential_shift;
  /**
   * Restrict iterates to `|k_a| <= mode_cutoff[a]`.
   */
  bool use_mode_cutoff;
  size_t mode_cutoff[3];
} TfwScfConfig;

/**
 * Energy terms of a ground state.
 */
typedef struct TfwEnergy {
  double kinetic_grad;
  double kinetic_tf;
  double hartree;
  double total;
} TfwEnergy;

/**
 * Scalars of a ground state.
 */
typedef struct TfwSummary {
  struct TfwEnergy energy;
  double lambda;
  size_t iterations;
  double el_residual;
  double total_charge;
} TfwSummary;

/**
 * Homogenization study parameters; see [`tfw_plan_default`].
 */
typedef struct TfwPlan {
  /**
   * Study `N = 1..=n_max`.
   */
  uint32_t n_max;
  size_t per_n_x1;
  size_t n2;
  size_t n3;
  double q_side;
  double length_x3;
  /**
   * Apply the `(4N, 0, 6)` mode truncation to `m_N`.
   */
  bool filter;
  bool parallel;
  struct TfwScfConfig scf;
} TfwPlan;

/**
 * One converged `N` of a study.
 */
typedef struct TfwReportRow {
  uint32_t n;
  double energy;
  double err_l1;
  double err_l2;
  double err_linf;
  double err_grad_l2;
  size_t iterations;
  double el_residual;
} TfwReportRow;

/**
 * Log-log fit of `energy` (the gap `|I_N - I_0|`), `err_L1`, `err_L2`,
 * `err_Linf` or `err_grad_L2` against `N`.
 */
typedef struct TfwRate {
  double slope;
  double intercept;
  double r_squared;
} TfwRate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread (empty if none).
 */
const char *tfw_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tfw_version(void);

/**
 * Grid over `Q x [-L/2, L/2]` with `Q` a square of side `q_side`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum TfwStatus tfw_grid_new(double q_side,
                            double length_x3,
                            size_t n1,
                            size_t n2,
                            size_t n3,
                            struct TfwGrid **out);

/**
 * Line grid (`n1 = n2 = 1`) for the reduced 1D problem.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum TfwStatus tfw_grid_line(double length_x3, size_t n3, struct TfwGrid **out);

/**
 * Number of grid points, or 0 for a null handle.
 *
 * # Safety
 * `grid` must be null or a handle from `tfw_grid_new`/`tfw_grid_line`.
 */
size_t tfw_grid_len(const struct TfwGrid *grid);

/**
 * # Safety
 * `grid` must be null or a live grid handle; it is invalid afterwards.
 */
void tfw_grid_free(struct TfwGrid *grid);

/**
 * `(5 pi/2) |cos(n pi x1)| exp(-x3^2/8)`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum TfwStatus tfw_model_standard(uint32_t n, struct TfwModel **out);

/**
 * `amplitude |cos(n pi x1)| exp(-x3^2 / gauss_width)`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum TfwStatus tfw_model_separable(uint32_t n,
                                   double amplitude,
                                   double gauss_width,
                                   struct TfwModel **out);

/**
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum TfwStatus tfw_model_constant(double value, struct TfwModel **out);

/**
 * In-plane invariant density from `len` samples on a uniform `x3` grid.
 *
 * # Safety
 * `values` must point to `len` readable doubles; `out` must be writable.
 */
enum TfwStatus tfw_model_x3_profile(const double *values, size_t len, struct TfwModel **out);

/**
 * Density tabulated on `grid` (`x3` fastest, then `x2`, then `x1`).
 *
 * # Safety
 * `grid` must be a live grid handle, `values` must point to
 * `tfw_grid_len(grid)` readable doubles, `out` must be writable.
 */
enum TfwStatus tfw_model_tabulated(const struct TfwGrid *grid,
                                   const double *values,
                                   size_t len,
                                   struct TfwModel **out);

/**
 * # Safety
 * `model` must be null or a live model handle; it is invalid afterwards.
 */
void tfw_model_free(struct TfwModel *model);

struct TfwScfConfig tfw_scf_config_default(void);

/**
 * Ground state of the 3D problem. `config` may be null for defaults.
 *
 * # Safety
 * Handles must be live; `config` null or valid; `out` writable.
 */
enum TfwStatus tfw_scf_solve(const struct TfwModel *model,
                             const struct TfwGrid *grid,
                             const struct TfwScfConfig *config,
                             struct TfwResult **out);

/**
 * Ground state of the reduced 1D problem on a line grid.
 *
 * # Safety
 * Handles must be live; `config` null or valid; `out` writable.
 */
enum TfwStatus tfw_scf_solve_1d(const struct TfwModel *model,
                                const struct TfwGrid *grid,
                                const struct TfwScfConfig *config,
                                struct TfwResult **out);

/**
 * # Safety
 * `result` must be a live result handle and `out` writable.
 */
enum TfwStatus tfw_result_summary(const struct TfwResult *result, struct TfwSummary *out);

/**
 * Copy `rho`, `u` or `Phi` into `buf`, which must hold the grid length.
 *
 * # Safety
 * `result` must be live and `buf` must point to `len` writable doubles.
 */
enum TfwStatus tfw_result_copy_field(const struct TfwResult *result,
                                     enum TfwFieldKind kind,
                                     double *buf,
                                     size_t len);

/**
 * # Safety
 * `result` must be null or a live result handle; it is invalid afterwards.
 */
void tfw_result_free(struct TfwResult *result);

/**
 * Desk-scale study: grids `(32 N, 4, 64)`, `N = 1..4`.
 */
struct TfwPlan tfw_plan_default(void);

/**
 * Run the study for the base density `model` (rescaled to `m(N x1, N x2, x3)`
 * for each `N`). A report is produced even if some `N` fail; check
 * [`tfw_report_failures`].
 *
 * # Safety
 * `model` must be live, `plan` null or valid, `out` writable.
 */
enum TfwStatus tfw_homogenize(const struct TfwModel *model,
                              const struct TfwPlan *plan,
                              struct TfwReport **out);

/**
 * Number of converged rows.
 *
 * # Safety
 * `report` must be null or a live report handle.
 */
size_t tfw_report_len(const struct TfwReport *report);

/**
 * Number of `N` whose solve failed.
 *
 * # Safety
 * `report` must be null or a live report handle.
 */
size_t tfw_report_failures(const struct TfwReport *report);

/**
 * Energy `I_0` of the 1D reference, NaN for a null handle.
 *
 * # Safety
 * `report` must be null or a live report handle.
 */
double tfw_report_i0(const struct TfwReport *report);

/**
 * # Safety
 * `report` must be live and `out` writable.
 */
enum TfwStatus tfw_report_row(const struct TfwReport *report,
                              size_t index,
                              struct TfwReportRow *out);

/**
 * # Safety
 * `report` must be live, `quantity` a NUL-terminated string, `out` writable.
 */
enum TfwStatus tfw_report_rate(const struct TfwReport *report,
                               const char *quantity,
                               struct TfwRate *out);

/**
 * # Safety
 * `report` must be null or a live report handle; it is invalid afterwards.
 */
void tfw_report_free(struct TfwReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TFW_H */
