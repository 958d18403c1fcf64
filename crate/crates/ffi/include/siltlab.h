#ifndef SILTLAB_H
#define SILTLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SiltStatus {
  SILT_STATUS_OK = 0,
  SILT_STATUS_NULL_POINTER = 1,
  SILT_STATUS_INVALID_PARAMETER = 2,
  SILT_STATUS_INDEX_OUT_OF_RANGE = 3,
  SILT_STATUS_LENGTH_MISMATCH = 4,
  SILT_STATUS_BUFFER_TOO_SMALL = 5,
  SILT_STATUS_PANIC = 6,
  SILT_STATUS_INTERNAL = 7,
} SiltStatus;

typedef enum SiltMode {
  // Exact pair sums, quadratic in the number of steps.
  SILT_MODE_REFERENCE = 0,
  // Binned sums with the default bin width.
  SILT_MODE_FAST = 1,
} SiltMode;

typedef enum SiltForm {
  SILT_FORM_LIMIT = 0,
  SILT_FORM_MOLLIFIED = 1,
} SiltForm;

// Opaque simulated path.
typedef struct SiltPath SiltPath;

typedef struct SiltTanakaReport {
  uint64_t seed;
  uint64_t replicate;
  double x;
  double t;
  double epsilon;
  double dt;
  double alpha_prime;
  double sgn_term;
  double ito_term;
  double sgn_integral;
  double lhs;
  double rhs;
  double residual;
} SiltTanakaReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *silt_version(void);

// Message of the last failed call on this thread, or an empty string.
// Valid until the next call into the library on the same thread.
const char *silt_last_error_message(void);

// Simulates replicate `replicate` of `master_seed` with `n_steps` steps of `dt`.
//
// # Safety
// `out` must be valid for a pointer write.
enum SiltStatus silt_path_generate(uint64_t master_seed,
                                   uint64_t replicate,
                                   size_t n_steps,
                                   double dt,
                                   struct SiltPath **out);

// Wraps `len` samples on a grid of step `dt`; `values[0]` must be 0.
//
// # Safety
// `values` must point to `len` readable doubles and `out` must be valid
// for a pointer write.
enum SiltStatus silt_path_from_values(const double *values,
                                      size_t len,
                                      double dt,
                                      struct SiltPath **out);

// Releases a path. Null is ignored.
//
// # Safety
// `path` must come from this library and not be freed twice.
void silt_path_free(struct SiltPath *path);

// Number of grid steps; the path holds `n_steps + 1` values.
//
// # Safety
// `path` must be a live handle and `out` valid for a write.
enum SiltStatus silt_path_n_steps(const struct SiltPath *path, size_t *out);

// # Safety
// `path` must be a live handle and `out` valid for a write.
enum SiltStatus silt_path_dt(const struct SiltPath *path, double *out);

// Copies the `n_steps + 1` values into `buf`. `len_out` (if not null)
// receives the required length even when `capacity` is too small.
//
// # Safety
// `buf` must be writable for `capacity` doubles.
enum SiltStatus silt_path_copy_values(const struct SiltPath *path,
                                      double *buf,
                                      size_t capacity,
                                      size_t *len_out);

// The path `u -> B_s - B_{s-u}` on `[0, s]`.
//
// # Safety
// `path` must be a live handle and `out` valid for a pointer write.
enum SiltStatus silt_path_reverse_from(const struct SiltPath *path,
                                       size_t s_index,
                                       struct SiltPath **out);

// The mirrored path `-B`.
//
// # Safety
// `path` must be a live handle and `out` valid for a pointer write.
enum SiltStatus silt_path_reflect(const struct SiltPath *path, struct SiltPath **out);

// `f_eps(x)`.
//
// # Safety
// `out` must be valid for a write.
enum SiltStatus silt_mollifier_eval(double epsilon, double x, double *out);

// `f_eps'(x)`.
//
// # Safety
// `out` must be valid for a write.
enum SiltStatus silt_mollifier_deriv(double epsilon, double x, double *out);

// `F_eps(x) = erf(x/eps)/2`.
//
// # Safety
// `out` must be valid for a write.
enum SiltStatus silt_mollifier_antideriv(double epsilon, double x, double *out);

// Sign with `sgn(0) = 0`.
double silt_sgn(double x);

// Kernel local time `sum_{k<up_to} f_eps(B_k - level) dt`.
//
// # Safety
// `path` must be a live handle and `out` valid for a write.
enum SiltStatus silt_local_time_kernel(const struct SiltPath *path,
                                       size_t up_to,
                                       double level,
                                       double epsilon,
                                       double *out);

// Downcrossing local time `2 h D`.
//
// # Safety
// `path` must be a live handle and `out` valid for a write.
enum SiltStatus silt_local_time_downcrossing(const struct SiltPath *path,
                                             size_t up_to,
                                             double level,
                                             double half_width,
                                             double *out);

// Downcrossing local time normalized by the band width the sampled path
// effectively sees.
//
// # Safety
// `path` must be a live handle and `out` valid for a write.
enum SiltStatus silt_local_time_downcrossing_corrected(const struct SiltPath *path,
                                                       size_t up_to,
                                                       double level,
                                                       double half_width,
                                                       double *out);

// Writes the moving-level curve at `s = 0..=up_to` into `buf`, which must
// hold `up_to + 1` values.
//
// # Safety
// `buf` must be writable for `capacity` doubles.
enum SiltStatus silt_moving_level_curve(const struct SiltPath *path,
                                        double x,
                                        double epsilon,
                                        size_t up_to,
                                        enum SiltMode mode_,
                                        double *buf,
                                        size_t capacity);

// `alpha'_{t,eps}(x)` at `t = t_index dt`.
//
// # Safety
// `path` must be a live handle and `out` valid for a write.
enum SiltStatus silt_silt_derivative(const struct SiltPath *path,
                                     double x,
                                     double epsilon,
                                     size_t t_index,
                                     enum SiltMode mode_,
                                     double *out);

// `V(x, eps, t)`.
//
// # Safety
// `path` must be a live handle and `out` valid for a write.
enum SiltStatus silt_stochastic_integral_v(const struct SiltPath *path,
                                           double x,
                                           double epsilon,
                                           size_t t_index,
                                           enum SiltMode mode_,
                                           double *out);

// `sum_{u<t} sgn(B_t - B_u - x) dt`.
//
// # Safety
// `path` must be a live handle and `out` valid for a write.
enum SiltStatus silt_sgn_time_integral(const struct SiltPath *path,
                                       double x,
                                       size_t t_index,
                                       double *out);

// All terms of the identity at `(x, t_index dt)`.
//
// # Safety
// `path` must be a live handle and `out` valid for a write.
enum SiltStatus silt_tanaka_report(const struct SiltPath *path,
                                   double x,
                                   double epsilon,
                                   size_t t_index,
                                   enum SiltMode mode_,
                                   enum SiltForm form,
                                   struct SiltTanakaReport *out);

// Residual of the classical Tanaka formula with the kernel local time.
//
// # Safety
// `path` must be a live handle and `out` valid for a write.
enum SiltStatus silt_classical_tanaka_residual(const struct SiltPath *path,
                                               double x,
                                               double epsilon,
                                               size_t t_index,
                                               double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SILTLAB_H */
