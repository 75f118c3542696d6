#ifndef DUALAPPELL_H
#define DUALAPPELL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DaStatus {
  DA_STATUS_OK = 0,
  DA_STATUS_NULL_POINTER = 1,
  DA_STATUS_INVALID_UTF8 = 2,
  DA_STATUS_PARSE = 3,
  DA_STATUS_INVALID = 4,
  DA_STATUS_TRUNCATION = 5,
  DA_STATUS_ENVELOPE = 6,
  DA_STATUS_IO = 7,
  DA_STATUS_PANIC = 8,
} DaStatus;

// Opaque Kingman `Λ_s`.
typedef struct DaLambda DaLambda;

// Opaque polynomial system built from a run configuration.
typedef struct DaSystem DaSystem;

// Result of a two-path S-transform evaluation.
typedef struct DaSTransform {
  double path_a;
  double path_b;
  double tail_bound;
} DaSTransform;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty if none. The
// pointer stays valid until the next failing call on the same thread.
const char *da_last_error_message(void);

const char *da_version(void);

// # Safety
// `s` must be null or a string returned by this library.
void da_string_free(char *s);

// Builds a system from run-configuration JSON (see the CLI `--config`).
//
// # Safety
// `config_json` must be a NUL-terminated string; `out` must be writable.
enum DaStatus da_system_from_config(const char *config_json, struct DaSystem **out);

// # Safety
// `sys` must be null or a handle from [`da_system_from_config`].
void da_system_free(struct DaSystem *sys);

// Writes `d`, `n1` and the degree cap `N`.
//
// # Safety
// `sys` must be a live handle; output pointers must be writable.
enum DaStatus da_system_shape(const struct DaSystem *sys, size_t *dim, size_t *n1, size_t *n_cap);

// `P_ñ(z)` as tensor JSON (rational systems emit exact `"num/den"` strings).
//
// # Safety
// `z` must point to `len` doubles; `out` must be writable. Free the
// returned string with [`da_string_free`].
enum DaStatus da_system_p_kernel_json(const struct DaSystem *sys,
                                      size_t n,
                                      const double *z,
                                      size_t len,
                                      char **out);

// Value at `x` of a polynomial element given as JSON in either basis.
//
// # Safety
// `element_json` must be NUL-terminated; `x` must point to `len` doubles.
enum DaStatus da_system_evaluate(const struct DaSystem *sys,
                                 const char *element_json,
                                 const double *x,
                                 size_t len,
                                 double *out);

// Two-path S-transform of a dual functional (JSON) at `theta`.
//
// # Safety
// `functional_json` must be NUL-terminated; `theta` must point to `len`
// doubles; `out` must be writable.
enum DaStatus da_system_s_transform(const struct DaSystem *sys,
                                    const char *functional_json,
                                    const double *theta,
                                    size_t len,
                                    struct DaSTransform *out);

// Runs every verification suite; writes the JSON report and whether all
// suites passed.
//
// # Safety
// `config_json` must be NUL-terminated; output pointers must be writable.
enum DaStatus da_verify(const char *config_json, char **report, bool *all_pass);

// `Λ_s` with `terms` coefficients; `s` is a rational literal like `"1/2"`.
//
// # Safety
// `s` must be NUL-terminated; `out` must be writable.
enum DaStatus da_lambda_new(const char *s, size_t terms, struct DaLambda **out);

// # Safety
// `l` must be null or a handle from [`da_lambda_new`].
void da_lambda_free(struct DaLambda *l);

// `Λ_s(re + i·im)` and its truncation-tail bound. Fails with
// [`DaStatus::Envelope`] outside the accuracy envelope.
//
// # Safety
// `l` must be a live handle; output pointers must be writable.
enum DaStatus da_lambda_eval(const struct DaLambda *l,
                             double re,
                             double im,
                             double *out_re,
                             double *out_im,
                             double *tail_bound);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DUALAPPELL_H */
