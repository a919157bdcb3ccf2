#ifndef SADDLE_H
#define SADDLE_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result codes shared by every fallible function.
typedef enum SaddleStatus {
  SADDLE_STATUS_OK = 0,
  SADDLE_STATUS_NULL_POINTER = 1,
  SADDLE_STATUS_INVALID_ARGUMENT = 2,
  SADDLE_STATUS_NUMERICAL = 3,
  SADDLE_STATUS_PARSE = 4,
  SADDLE_STATUS_IO = 5,
  SADDLE_STATUS_PANIC = 6,
} SaddleStatus;

// Solver selection for [`saddle_solve`].
typedef enum SaddleMethod {
  SADDLE_METHOD_ADMM = 0,
  SADDLE_METHOD_GMRES_LEFT = 1,
  SADDLE_METHOD_GMRES_RIGHT = 2,
} SaddleMethod;

// Opaque problem handle.
typedef struct saddle_problem saddle_problem;

// Opaque handle to the residual history of one solve.
typedef struct saddle_trace saddle_trace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *saddle_last_error_message(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void saddle_string_free(char *s);

// Parses a problem from its JSON representation.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum SaddleStatus saddle_problem_from_json(const char *json, struct saddle_problem **out);

// Generates a random problem with the given dimensions, spread and seed.
//
// # Safety
// `out` must be writable.
enum SaddleStatus saddle_problem_generate(uintptr_t nx,
                                          uintptr_t ny,
                                          uintptr_t nz,
                                          double s,
                                          uint64_t seed,
                                          struct saddle_problem **out);

// Serializes a problem to JSON. Free the result with [`saddle_string_free`].
//
// # Safety
// `problem` must be a live handle; `out` must be writable.
enum SaddleStatus saddle_problem_to_json(const struct saddle_problem *problem, char **out);

// Writes `nx`, `ny`, `nz` of a problem.
//
// # Safety
// `problem` must be a live handle; the out pointers must be writable.
enum SaddleStatus saddle_problem_dims(const struct saddle_problem *problem,
                                      uintptr_t *nx,
                                      uintptr_t *ny,
                                      uintptr_t *nz);

// Releases a problem handle. Null is ignored.
//
// # Safety
// `problem` must come from this library and not have been freed.
void saddle_problem_free(struct saddle_problem *problem);

// Extreme eigenvalues `m`, `ell` of `(A D⁻¹ Aᵀ)⁻¹` and their ratio.
//
// # Safety
// `problem` must be a live handle; the out pointers must be writable.
enum SaddleStatus saddle_dtilde_extremes(const struct saddle_problem *problem,
                                         double *m,
                                         double *ell,
                                         double *kappa);

// Draws `β = 10^{2Y}`, `Y ~ U[−1, 1]`, from `seed`.
double saddle_sample_beta(uint64_t seed);

// Solves the KKT system densely into `out`, stacked as `[x; z; y]`.
//
// # Safety
// `problem` must be a live handle; `out` must hold `out_len` doubles.
enum SaddleStatus saddle_direct_solve(const struct saddle_problem *problem,
                                      double *out,
                                      uintptr_t out_len);

// Runs a solver from the zero iterate and returns its trace.
//
// # Safety
// `problem` must be a live handle; `out` must be writable.
enum SaddleStatus saddle_solve(const struct saddle_problem *problem,
                               enum SaddleMethod method,
                               double beta,
                               double eps,
                               uintptr_t max_iter,
                               struct saddle_trace **out);

// Number of iterations taken; 0 for a null handle.
//
// # Safety
// `trace` must be null or a live handle.
uintptr_t saddle_trace_iterations(const struct saddle_trace *trace);

// Whether the run met its tolerance; false for a null handle.
//
// # Safety
// `trace` must be null or a live handle.
bool saddle_trace_converged(const struct saddle_trace *trace);

// Copies up to `len` absolute KKT residuals into `out` and writes the full
// count (iterations + 1) to `count`.
//
// # Safety
// `trace` must be a live handle; `out` must hold `len` doubles (it may be
// null when `len` is 0); `count` must be writable.
enum SaddleStatus saddle_trace_residuals(const struct saddle_trace *trace,
                                         double *out,
                                         uintptr_t len,
                                         uintptr_t *count);

// Copies the final iterate `[x; z; y]` into `out`, which must hold exactly
// `nx + nz + ny` doubles.
//
// # Safety
// `trace` must be a live handle; `out` must hold `len` doubles.
enum SaddleStatus saddle_trace_solution(const struct saddle_trace *trace,
                                        double *out,
                                        uintptr_t len);

// Releases a trace handle. Null is ignored.
//
// # Safety
// `trace` must come from this library and not have been freed.
void saddle_trace_free(struct saddle_trace *trace);

// Spectral report at `beta` as JSON. Free with [`saddle_string_free`].
//
// # Safety
// `problem` must be a live handle; `out` must be writable.
enum SaddleStatus saddle_spectrum_json(const struct saddle_problem *problem,
                                       double beta,
                                       char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SADDLE_H */
