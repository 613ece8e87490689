#ifndef LPSPARSE_H
#define LPSPARSE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LpsStatus {
  LPS_STATUS_OK = 0,
  LPS_STATUS_NULL_POINTER = 1,
  LPS_STATUS_INVALID_ARGUMENT = 2,
  LPS_STATUS_DIMENSION_MISMATCH = 3,
  LPS_STATUS_DIVERGENCE = 4,
  /**
   * `p < 1` with a non-diagonal operator.
   */
  LPS_STATUS_UNSUPPORTED = 5,
  /**
   * The iteration limit was reached; outputs hold the last iterate.
   */
  LPS_STATUS_NOT_CONVERGED = 6,
  LPS_STATUS_PANIC = 7,
} LpsStatus;

/**
 * Opaque forward operator.
 */
typedef struct LpsOperator LpsOperator;

/**
 * Opaque regularized problem (operator, data, alpha, penalty).
 */
typedef struct LpsProblem LpsProblem;

typedef struct LpsSolveInfo {
  double objective;
  size_t iterations;
  /**
   * NaN when no certificate exists (`p < 1`).
   */
  double certificate_residual;
  bool converged;
} LpsSolveInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len - 1` bytes) and returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t lps_last_error_message(char *buf, size_t len);

/**
 * `H^p_alpha(x)`.
 *
 * # Safety
 * `out` must be null or writable.
 */
enum LpsStatus lps_threshold(double p, double alpha, double x, double *out);

/**
 * Jump location of `H^p_alpha` for `0 <= p < 1`.
 *
 * # Safety
 * `out` must be null or writable.
 */
enum LpsStatus lps_effective_threshold(double p, double alpha, double *out);

/**
 * Grid minimizer of `(y - x)^2 + alpha |y|^p` over `grid_points` points in
 * `[-grid_halfwidth, grid_halfwidth]`.
 *
 * # Safety
 * `out` must be null or writable.
 */
enum LpsStatus lps_oracle_threshold(double p,
                                    double alpha,
                                    double x,
                                    double grid_halfwidth,
                                    size_t grid_points,
                                    double *out);

/**
 * `kappa(p, C, L)` of the lower bound on the Bregman distance.
 *
 * # Safety
 * `out` must be null or writable.
 */
enum LpsStatus lps_kappa(double p, double c, double l, double *out);

/**
 * Least-squares slope of `log ys` against `log xs`.
 *
 * # Safety
 * `xs` and `ys` must point to `len` readable doubles; `out` must be writable.
 */
enum LpsStatus lps_fit_loglog_slope(const double *xs, const double *ys, size_t len, double *out);

/**
 * Dense `m x n` operator from a row-major matrix.
 *
 * # Safety
 * `row_major` must point to `m * n` readable doubles; `out` must be writable.
 */
enum LpsStatus lps_operator_dense_new(size_t m,
                                      size_t n,
                                      const double *row_major,
                                      struct LpsOperator **out);

/**
 * Diagonal operator `(K u)_k = sigma_k u_k`.
 *
 * # Safety
 * `sigma` must point to `n` readable doubles; `out` must be writable.
 */
enum LpsStatus lps_operator_diagonal_new(size_t n, const double *sigma, struct LpsOperator **out);

/**
 * # Safety
 * `op` must be null or a handle from `lps_operator_*_new` not yet freed.
 */
void lps_operator_free(struct LpsOperator *op);

/**
 * Output and input dimensions `(m, n)`.
 *
 * # Safety
 * `op` must be a live handle; `m` and `n` must be writable.
 */
enum LpsStatus lps_operator_dims(const struct LpsOperator *op, size_t *m, size_t *n);

/**
 * Spectral norm `||K||`.
 *
 * # Safety
 * `op` must be a live handle; `out` must be writable.
 */
enum LpsStatus lps_operator_norm(const struct LpsOperator *op, double *out);

/**
 * `out = K u`.
 *
 * # Safety
 * `u` must hold `n_in` doubles and `out` room for `m_out` doubles.
 */
enum LpsStatus lps_operator_apply(const struct LpsOperator *op,
                                  const double *u,
                                  size_t n_in,
                                  double *out,
                                  size_t m_out);

/**
 * `out = K* r`.
 *
 * # Safety
 * `r` must hold `m_in` doubles and `out` room for `n_out` doubles.
 */
enum LpsStatus lps_operator_adjoint_apply(const struct LpsOperator *op,
                                          const double *r,
                                          size_t m_in,
                                          double *out,
                                          size_t n_out);

/**
 * Problem `||K u - g||^2 + alpha sum_k w_k |u_k|^p`. The operator is copied,
 * so `op` may be freed afterwards. `weights` may be null for `w = 1`;
 * otherwise it holds `n` entries, `n` the operator's input dimension.
 *
 * # Safety
 * `data` must hold `m` doubles, `weights` null or `n` doubles, `out`
 * writable.
 */
enum LpsStatus lps_problem_new(const struct LpsOperator *op,
                               const double *data,
                               size_t m,
                               double alpha,
                               double p,
                               const double *weights,
                               size_t n,
                               struct LpsProblem **out);

/**
 * # Safety
 * `prob` must be null or a handle from `lps_problem_new` not yet freed.
 */
void lps_problem_free(struct LpsProblem *prob);

/**
 * Value of the functional at `u`.
 *
 * # Safety
 * `prob` must be a live handle, `u` must hold `n` doubles, `out` writable.
 */
enum LpsStatus lps_problem_objective(const struct LpsProblem *prob,
                                     const double *u,
                                     size_t n,
                                     double *out);

/**
 * Exact minimizer for a diagonal operator.
 *
 * # Safety
 * `u_out` must have room for `n` doubles; `info` null or writable.
 */
enum LpsStatus lps_solve_diagonal(const struct LpsProblem *prob,
                                  double *u_out,
                                  size_t n,
                                  struct LpsSolveInfo *info);

/**
 * Iterated thresholding from `u = 0`.
 *
 * # Safety
 * `u_out` must have room for `n` doubles; `info` null or writable.
 */
enum LpsStatus lps_solve_iterative(const struct LpsProblem *prob,
                                   size_t max_iter,
                                   double tol,
                                   double *u_out,
                                   size_t n,
                                   struct LpsSolveInfo *info);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LPSPARSE_H */
