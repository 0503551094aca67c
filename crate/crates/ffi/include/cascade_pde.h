#ifndef CASCADE_PDE_H
#define CASCADE_PDE_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CpStatus {
  CP_STATUS_OK = 0,
  CP_STATUS_NULL_POINTER = 1,
  CP_STATUS_INVALID_UTF8 = 2,
  CP_STATUS_PARSE = 3,
  CP_STATUS_VALIDATION = 4,
  CP_STATUS_NO_WAVE = 5,
  CP_STATUS_NO_MINIMUM = 6,
  CP_STATUS_NUMERIC = 7,
  CP_STATUS_OUT_OF_RANGE = 8,
  CP_STATUS_IO = 9,
  CP_STATUS_PANIC = 10,
} CpStatus;

/**
 * Opaque solution handle.
 */
typedef struct CpSolution CpSolution;

/**
 * Speed summary returned by the speed functions.
 */
typedef struct CpSpeed {
  double c_star;
  double lambda_star;
  /**
   * 1 for a closed form, 0 for the numeric minimum.
   */
  int32_t closed_form;
} CpSpeed;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into this library on the same thread.
 */
const char *cp_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cp_version(void);

/**
 * SIR minimal speed `2 sqrt(d2 (beta - gamma))`; `CP_STATUS_NO_WAVE` when `beta <= gamma`.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `CpSpeed`.
 */
enum CpStatus cp_speed_sir(double d2, double beta, double gamma, struct CpSpeed *out);

/**
 * Invasion speed of species 1 into species 2 at capacity `k2`.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `CpSpeed`.
 */
enum CpStatus cp_speed_competition(double d1,
                                   double r1,
                                   double alpha1,
                                   double k2,
                                   struct CpSpeed *out);

/**
 * Two-source cooperative speed; requires `d1 >= d2` and `r1 >= r2`.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `CpSpeed`.
 */
enum CpStatus cp_speed_cooperative(double d1,
                                   double r1,
                                   double d2,
                                   double r2,
                                   double a1,
                                   double a2,
                                   double k1,
                                   double k2,
                                   struct CpSpeed *out);

/**
 * Numeric minimal speed of a general `n`-component linearization.
 * `jacobian` is row-major `n * n`.
 *
 * # Safety
 * `diffusion` must point to `n` doubles, `jacobian` to `n * n` doubles and
 * `out` to writable memory for one `CpSpeed`.
 */
enum CpStatus cp_speed_numeric(size_t n,
                               const double *diffusion,
                               const double *jacobian,
                               struct CpSpeed *out);

/**
 * Principal eigenvalue of `-(a u')' = mu u` on `[l, upper]` with
 * `a(x) = d e^(-b x)`, Neumann at `l` and Robin coefficient `alpha_r` at `upper`.
 *
 * # Safety
 * `mu` must point to writable memory for one double.
 */
enum CpStatus cp_principal_eigenvalue(double d,
                                      double b,
                                      double alpha_r,
                                      double l,
                                      double upper,
                                      size_t nx,
                                      double *mu);

/**
 * Solve the model described by a TOML document in the `solve` config format.
 * On success `*out` owns a handle released with [`cp_solution_free`].
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` must point to writable
 * memory for one pointer.
 */
enum CpStatus cp_solve_toml(const char *toml, struct CpSolution **out);

/**
 * Release a solution handle. Null is ignored.
 *
 * # Safety
 * `handle` must be null or come from [`cp_solve_toml`] and not be freed twice.
 */
void cp_solution_free(struct CpSolution *handle);

/**
 * Number of spatial nodes, or 0 for a null handle.
 *
 * # Safety
 * `handle` must be null or a live handle.
 */
size_t cp_solution_node_count(const struct CpSolution *handle);

/**
 * Number of stored time levels, or 0 for a null handle.
 *
 * # Safety
 * `handle` must be null or a live handle.
 */
size_t cp_solution_time_count(const struct CpSolution *handle);

/**
 * Number of components, or 0 for a null handle.
 *
 * # Safety
 * `handle` must be null or a live handle.
 */
size_t cp_solution_component_count(const struct CpSolution *handle);

/**
 * Copy the node coordinates into `buf`, which holds `len` doubles.
 *
 * # Safety
 * `handle` must be a live handle and `buf` must point to `len` writable doubles.
 */
enum CpStatus cp_solution_xs(const struct CpSolution *handle, double *buf, size_t len);

/**
 * Copy the stored times into `buf`, which holds `len` doubles.
 *
 * # Safety
 * `handle` must be a live handle and `buf` must point to `len` writable doubles.
 */
enum CpStatus cp_solution_times(const struct CpSolution *handle, double *buf, size_t len);

/**
 * Copy component `c` at time level `k` into `buf`, which holds `len` doubles.
 *
 * # Safety
 * `handle` must be a live handle and `buf` must point to `len` writable doubles.
 */
enum CpStatus cp_solution_snapshot(const struct CpSolution *handle,
                                   size_t c,
                                   size_t k,
                                   double *buf,
                                   size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CASCADE_PDE_H */
