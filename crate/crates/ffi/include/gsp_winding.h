#ifndef GSP_WINDING_H
#define GSP_WINDING_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Which variance kernel to evaluate.
typedef enum GspKernel {
  GSP_KERNEL_K = 0,
  GSP_KERNEL_KTILDE = 1,
  GSP_KERNEL_KTILDE_STAR = 2,
} GspKernel;

// Status codes.
typedef enum GspStatus {
  GSP_STATUS_OK = 0,
  GSP_STATUS_NULL_POINTER = 1,
  GSP_STATUS_INVALID_ARGUMENT = 2,
  GSP_STATUS_DEGENERATE = 3,
  GSP_STATUS_NUMERICAL = 4,
  GSP_STATUS_SIMULATION = 5,
  GSP_STATUS_BUFFER_TOO_SMALL = 6,
  GSP_STATUS_PANIC = 7,
} GspStatus;

// Opaque spectral measure with its covariance evaluator.
typedef struct GspMeasure GspMeasure;

// Monte Carlo summary of the winding at one horizon.
typedef struct GspMcSummary {
  double mean;
  double var;
  double se_mean;
  double se_var;
  size_t n_paths;
  size_t failures;
  size_t n_freq;
  double dt0;
} GspMcSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the last failure on this thread, or an empty string.
// The pointer stays valid until the next call into this library on the
// same thread.
const char *gsp_last_error_message(void);

// Library version as a static string.
const char *gsp_version(void);

// Built-in measure by name. `params` may be null when `n_params` is 0.
//
// # Safety
// `name` must be a nul-terminated string, `params` must point to
// `n_params` doubles and `out_measure` must be writable.
enum GspStatus gsp_measure_builtin(const char *name,
                                   const double *params,
                                   size_t n_params,
                                   struct GspMeasure **out_measure);

// Measure from its JSON description.
//
// # Safety
// `json` must be a nul-terminated string and `out_measure` must be writable.
enum GspStatus gsp_measure_from_json(const char *json, struct GspMeasure **out_measure);

// Releases a measure; null is ignored.
//
// # Safety
// `m` must come from `gsp_measure_*` and not be used afterwards.
void gsp_measure_free(struct GspMeasure *m);

// Whether the measure is a single atom (1) or not (0).
//
// # Safety
// `m` must be a live handle and the output writable.
enum GspStatus gsp_measure_is_degenerate(const struct GspMeasure *m, int32_t *out_flag);

// Covariance `r(t)`.
//
// # Safety
// `m` must be a live handle and the outputs writable.
enum GspStatus gsp_covariance(const struct GspMeasure *m, double t, double *out_re, double *out_im);

// One variance kernel at `x`.
//
// # Safety
// `m` must be a live handle and the output writable.
enum GspStatus gsp_kernel(const struct GspMeasure *m,
                          enum GspKernel kernel,
                          double x,
                          double *out_value);

// Expected winding over `[0, t]`.
//
// # Safety
// `m` must be a live handle and the output writable.
enum GspStatus gsp_mean_winding(const struct GspMeasure *m, double t, double *out_value);

// Winding variance at `t` by the `K` and `K̃` routes.
//
// # Safety
// `m` must be a live handle and the outputs writable.
enum GspStatus gsp_variance(const struct GspMeasure *m,
                            double t,
                            double *out_v_k,
                            double *out_v_ktilde);

// Limit of `V(T)/T`. `out_finite` is 0 when the limit is infinite, and
// `out_value` then holds NaN.
//
// # Safety
// `m` must be a live handle and the outputs writable.
enum GspStatus gsp_asymptotic_slope(const struct GspMeasure *m,
                                    double *out_value,
                                    int32_t *out_finite);

// Points of `[0, x_max]` where `|r| = 1`. Writes at most `capacity`
// values and always stores the full count in `out_count`; returns
// `BufferTooSmall` when they do not fit.
//
// # Safety
// `m` must be a live handle, `out_points` must hold `capacity` doubles
// (or be null when `capacity` is 0) and `out_count` writable.
enum GspStatus gsp_singular_points(const struct GspMeasure *m,
                                   double x_max,
                                   double *out_points,
                                   size_t capacity,
                                   size_t *out_count);

// Monte Carlo winding over `[0, t]`. `n_freq = 0` and `dt0 <= 0` pick the
// defaults. When `out_deltas` is not null it must hold `n_paths` doubles
// and receives the windings of the `summary.n_paths` resolved paths.
//
// # Safety
// `m` must be a live handle, `out_summary` writable and `out_deltas`
// either null or valid for `n_paths` doubles.
enum GspStatus gsp_mc_winding(const struct GspMeasure *m,
                              double t,
                              size_t n_paths,
                              uint64_t seed,
                              size_t n_freq,
                              double dt0,
                              struct GspMcSummary *out_summary,
                              double *out_deltas);

// Normality test of standardized samples: KS statistic and p-value.
//
// # Safety
// `samples` must hold `n` doubles and the outputs be writable.
enum GspStatus gsp_clt_test(const double *samples, size_t n, double *out_ks, double *out_p);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GSP_WINDING_H */
