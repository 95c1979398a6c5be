#ifndef NLDD_H
#define NLDD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Right-hand side selector for `nldd_problem_new`.
 */
typedef enum NlddForcing {
  /**
   * `f = 0`
   */
  NLDD_FORCING_ZERO = 0,
  /**
   * `f = c x`
   */
  NLDD_FORCING_LINEAR_RAMP = 1,
  /**
   * `f = c sin(k pi x)`
   */
  NLDD_FORCING_SINE = 2,
} NlddForcing;

typedef enum NlddStatus {
  NLDD_STATUS_OK = 0,
  NLDD_STATUS_INVALID_INPUT = 1,
  NLDD_STATUS_DIMENSION_MISMATCH = 2,
  NLDD_STATUS_SOLVER_FAILURE = 3,
  NLDD_STATUS_SINGULAR_JACOBIAN = 4,
  NLDD_STATUS_UNSUPPORTED_ORACLE = 5,
  NLDD_STATUS_HYPOTHESIS_VIOLATED = 6,
  NLDD_STATUS_UNKNOWN_EXPERIMENT = 7,
  NLDD_STATUS_REJECTED_OVERRIDE = 8,
  NLDD_STATUS_IO = 9,
  NLDD_STATUS_PARSE = 10,
  NLDD_STATUS_NULL_POINTER = 11,
  NLDD_STATUS_PANIC = 12,
} NlddStatus;

/**
 * Result of an interface iteration.
 */
typedef struct NlddHistory NlddHistory;

/**
 * A two-subdomain split of the unit interval.
 */
typedef struct NlddProblem NlddProblem;

typedef struct NlddOptimalTheta {
  double theta;
  double delta;
  double d1;
  double d2;
  double lambda_exact;
} NlddOptimalTheta;

typedef struct NlddRecord {
  size_t iteration;
  double error_inf;
  double residual_inf;
  size_t inner_newton_total;
} NlddRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library from the same thread.
 */
const char *nldd_last_error(void);

/**
 * Library version as a static string.
 */
const char *nldd_version(void);

/**
 * Build `-((1 + alpha u^2) u')' = f` on (0, 1) with `u(0) = u_left`,
 * `u(1) = u_right`, `cells` uniform cells and one interface at `gamma`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum NlddStatus nldd_problem_new(double alpha,
                                 enum NlddForcing forcing,
                                 double k,
                                 double c,
                                 double u_left,
                                 double u_right,
                                 size_t cells,
                                 double gamma,
                                 struct NlddProblem **out_problem);

/**
 * # Safety
 * `problem` must come from `nldd_problem_new` and not be used afterwards.
 */
void nldd_problem_free(struct NlddProblem *problem);

/**
 * Interface value of the monodomain solution.
 *
 * # Safety
 * Pointers must be valid.
 */
enum NlddStatus nldd_exact_trace(const struct NlddProblem *problem, double *out_lambda);

/**
 * Relaxation parameter that makes the Dirichlet-Neumann iteration
 * converge quadratically.
 *
 * # Safety
 * Pointers must be valid.
 */
enum NlddStatus nldd_optimal_theta(const struct NlddProblem *problem,
                                   struct NlddOptimalTheta *out_theta);

/**
 * Outward interface flux of subdomain `index` (0 left, 1 right) for the
 * Dirichlet value `lambda`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum NlddStatus nldd_dtn(const struct NlddProblem *problem,
                         size_t index,
                         double lambda,
                         double *out_flux);

/**
 * Interface value of subdomain `index` for the outward flux `flux`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum NlddStatus nldd_ntd(const struct NlddProblem *problem,
                         size_t index,
                         double flux,
                         double *out_lambda);

/**
 * Relaxed Dirichlet-Neumann iteration from `lambda0`. Errors are measured
 * against the monodomain trace.
 *
 * # Safety
 * Pointers must be valid.
 */
enum NlddStatus nldd_dn_solve(const struct NlddProblem *problem,
                              double lambda0,
                              double theta,
                              double tol,
                              size_t max_outer,
                              struct NlddHistory **out_history);

/**
 * Newton's method on the substructured interface residual, preconditioned
 * by the Dirichlet-Neumann map with relaxation `theta`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum NlddStatus nldd_dnpen_solve(const struct NlddProblem *problem,
                                 double lambda0,
                                 double theta,
                                 double tol,
                                 size_t max_iter,
                                 struct NlddHistory **out_history);

/**
 * # Safety
 * `history` must be a valid handle.
 */
size_t nldd_history_len(const struct NlddHistory *history);

/**
 * # Safety
 * `history` must be a valid handle.
 */
bool nldd_history_converged(const struct NlddHistory *history);

/**
 * Final interface value.
 *
 * # Safety
 * `history` must be a valid handle.
 */
double nldd_history_lambda(const struct NlddHistory *history);

/**
 * # Safety
 * Pointers must be valid.
 */
enum NlddStatus nldd_history_record(const struct NlddHistory *history,
                                    size_t index,
                                    struct NlddRecord *out_record);

/**
 * # Safety
 * `history` must come from a solve and not be used afterwards.
 */
void nldd_history_free(struct NlddHistory *history);

/**
 * Run a named experiment with its default parameters and write the CSVs
 * and manifest into `out_dir`.
 *
 * # Safety
 * Both strings must be valid NUL-terminated strings.
 */
enum NlddStatus nldd_run_experiment(const char *name, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NLDD_H */
