/* C interface to the adgamp solver. Generated by cbindgen; do not edit. */

#ifndef ADGAMP_H
#define ADGAMP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible entry point.
typedef enum AdgampStatus {
  // Success.
  ADGAMP_OK = 0,
  // A required pointer argument was null.
  ADGAMP_NULL_POINTER = 1,
  // An argument value was out of range (dimensions, lengths, parameters).
  ADGAMP_INVALID_ARGUMENT = 2,
  // The damping configuration failed validation.
  ADGAMP_INVALID_CONFIG = 3,
  // The solver aborted with a numerical breakdown.
  ADGAMP_BREAKDOWN = 4,
  // The solver aborted after too many consecutive rejected attempts.
  ADGAMP_TOO_MANY_FAILS = 5,
  // A channel evaluation failed (invalid channel parameters).
  ADGAMP_CHANNEL_ERROR = 6,
  // Results were requested before a successful solve.
  ADGAMP_NOT_SOLVED = 7,
  // The callee panicked; the handle is left unchanged.
  ADGAMP_INTERNAL_ERROR = 8,
} AdgampStatus;

// Opaque problem handle.
typedef struct AdgampProblem AdgampProblem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Returns the error message of the most recent failure on this thread.
// The pointer is owned by the library and valid until the next failing
// call on the same thread; never free it.
const char *adgamp_last_error_message(void);

// Allocates a problem for an `m x n` dense matrix given in row-major order
// (`a[i*n + j]` is entry (i, j)). Channels default to a standard Gaussian
// prior and a unit-variance AWGN likelihood on zero observations; options
// default to adaptive damping with the cost check enabled. Returns null on
// invalid input.
//
// # Safety
// `a` must point to at least `m * n` readable doubles.
struct AdgampProblem *adgamp_problem_new(uintptr_t m, uintptr_t n, const double *a);

// Frees a problem handle. Passing null is a no-op.
//
// # Safety
// `p` must be a pointer returned by `adgamp_problem_new` that has not been
// freed already.
void adgamp_problem_free(struct AdgampProblem *p);

// Sets every input coordinate to a Bernoulli-Gaussian (spike-and-slab)
// prior with activity rate `tau` and active component `N(mean, var)`.
//
// # Safety
// `p` must be a live problem handle.
enum AdgampStatus adgamp_problem_set_input_bernoulli_gauss(struct AdgampProblem *p,
                                                           double tau,
                                                           double mean,
                                                           double var);

// Sets every input coordinate to a Gaussian `N(mean, var)` prior.
//
// # Safety
// `p` must be a live problem handle.
enum AdgampStatus adgamp_problem_set_input_gauss(struct AdgampProblem *p, double mean, double var);

// Sets every input coordinate to a Laplace prior with rate `lambda`.
//
// # Safety
// `p` must be a live problem handle.
enum AdgampStatus adgamp_problem_set_input_laplace(struct AdgampProblem *p, double lambda);

// Sets the likelihood to AWGN: `y_i = z_i + noise`, noise variance
// `noise_var`. `len` must equal the matrix row count.
//
// # Safety
// `p` must be a live problem handle; `y` must point to `len` doubles.
enum AdgampStatus adgamp_problem_set_output_awgn(struct AdgampProblem *p,
                                                 const double *y,
                                                 uintptr_t len,
                                                 double noise_var);

// Sets the likelihood to a two-component Gaussian mixture: with probability
// `1 - pi_out` the noise variance is `var_small`, otherwise `var_large`.
//
// # Safety
// `p` must be a live problem handle; `y` must point to `len` doubles.
enum AdgampStatus adgamp_problem_set_output_mixture(struct AdgampProblem *p,
                                                    const double *y,
                                                    uintptr_t len,
                                                    double pi_out,
                                                    double var_small,
                                                    double var_large);

// Sets the likelihood to one-bit observations `y_i = sgn(z_i)`; each entry
// of `y` must be -1.0 or +1.0.
//
// # Safety
// `p` must be a live problem handle; `y` must point to `len` doubles.
enum AdgampStatus adgamp_problem_set_output_sign(struct AdgampProblem *p,
                                                 const double *y,
                                                 uintptr_t len);

// Overrides the damping controls. `t_max` is the iteration cap, `epsilon`
// the relative stopping tolerance, `t_beta` the cost-window length,
// `beta_min`/`beta_max` the damping-factor bounds, and `g_pass`/`g_fail`
// the growth/shrink factors applied after accepted/rejected attempts.
//
// # Safety
// `p` must be a live problem handle.
enum AdgampStatus adgamp_problem_set_damping(struct AdgampProblem *p,
                                             uintptr_t t_max,
                                             double epsilon,
                                             uintptr_t t_beta,
                                             double beta_min,
                                             double beta_max,
                                             double g_pass,
                                             double g_fail);

// Enables or disables the adaptive cost check. With the check disabled and
// `beta_min = beta_max = 1` the solver reproduces the original undamped
// recursion.
//
// # Safety
// `p` must be a live problem handle.
enum AdgampStatus adgamp_problem_set_cost_check(struct AdgampProblem *p, bool enabled);

// Enables or disables the mean-removal wrapper (centering the matrix and
// solving the augmented system).
//
// # Safety
// `p` must be a live problem handle.
enum AdgampStatus adgamp_problem_set_mean_removal(struct AdgampProblem *p, bool enabled);

// Runs the solver on the configured problem. On success the result getters
// become available; on failure the previous result (if any) is cleared.
//
// # Safety
// `p` must be a live problem handle.
enum AdgampStatus adgamp_problem_solve(struct AdgampProblem *p);

// Copies the recovered signal estimate into `out` (length must equal the
// matrix column count).
//
// # Safety
// `p` must be a live problem handle; `out` must point to `len` writable
// doubles.
enum AdgampStatus adgamp_problem_x_hat(struct AdgampProblem *p, double *out, uintptr_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ADGAMP_H */
