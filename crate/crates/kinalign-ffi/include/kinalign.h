#ifndef KINALIGN_H
#define KINALIGN_H

/* Generated header; edit the Rust source instead. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes mirrored on the process exit codes of the CLI.
typedef enum KaStatus {
  // success
  KA_STATUS_OK = 0,
  // a run finished but breached a configured tolerance
  KA_STATUS_TOLERANCE = 2,
  // invalid configuration or argument
  KA_STATUS_CONFIG = 3,
  // numerical failure during a run
  KA_STATUS_NUMERICAL = 4,
  // null pointer or malformed buffer from the caller
  KA_STATUS_NULL_ARGUMENT = 5,
  // internal panic (a bug; details in the error message)
  KA_STATUS_PANIC = 6,
} KaStatus;

// Opaque experiment configuration.
typedef struct KaConfig KaConfig;

// Opaque run result: the observable table plus metadata.
typedef struct KaSeries KaSeries;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copy the last error message into `buf` (NUL-terminated, truncated to
// `len`). Returns the full message length.
//
// # Safety
// `buf` must point to `len` writable bytes, or be null (then only the
// length is returned).
size_t ka_last_error_message(char *buf, size_t len);

// Apply the alignment flow of duration `sigma` to the velocity tuple
// `v[0..len]` in place. Negative durations reconstruct pre-collisional
// states.
//
// # Safety
// `v` must point to `len` valid doubles, `len >= 2`.
enum KaStatus ka_phi_map(double sigma, double *v, size_t len);

// Jacobian determinant of the flow of duration `sigma` on groups of size
// `k`, written to `out`.
//
// # Safety
// `out` must be a valid pointer.
enum KaStatus ka_phi_jacobian_det(size_t k, double sigma, double *out);

// Alignment field `(U)_i = mean(v) - v_i` for the tuple `v[0..len]`,
// written to `out[0..len]`.
//
// # Safety
// `v` and `out` must point to `len` valid doubles, `len >= 1`.
enum KaStatus ka_interaction_field(const double *v, double *out, size_t len);

// Collision-duration density `b(sigma) = (mu11/2) exp(-sigma mu11/2)`.
//
// # Safety
// `out` must be a valid pointer.
enum KaStatus ka_duration_density(double mu11, double sigma, double *out);

// Equilibrium masses of the pair system for total mass `mass`.
//
// # Safety
// `out_m1` and `out_m2` must be valid pointers.
enum KaStatus ka_equilibrium_masses(double lambda11,
                                    double mu11,
                                    double epsilon,
                                    double mass,
                                    double *out_m1,
                                    double *out_m2);

// Detailed-balance size distribution for constant rates, written to
// `out[0..kmax]`.
//
// # Safety
// `out` must point to `kmax` valid doubles.
enum KaStatus ka_constant_rate_equilibrium(double lambda,
                                           double mu,
                                           double mass,
                                           size_t kmax,
                                           double *out);

// Least-squares order fit of `log err` against `log eps`; `eps` must be
// strictly decreasing with positive errors.
//
// # Safety
// `eps` and `err` must point to `len` valid doubles, and the output
// pointers must be valid.
enum KaStatus ka_convergence_order(const double *eps,
                                   const double *err,
                                   size_t len,
                                   double *out_slope,
                                   double *out_r2);

// Parse and validate a TOML configuration text. Returns null on failure
// (inspect [`ka_last_error_message`]).
//
// # Safety
// `text` must be a NUL-terminated UTF-8 string.
struct KaConfig *ka_config_parse(const char *text);

// Release a configuration handle.
//
// # Safety
// `cfg` must come from [`ka_config_parse`] and not be used afterwards.
void ka_config_free(struct KaConfig *cfg);

// Run the configured experiment and return the observable series as an
// opaque handle (null on failure). A tolerance breach still returns the
// series; query breaches through the status code of [`ka_run_to_dir`].
//
// # Safety
// `cfg` must be a live handle from [`ka_config_parse`].
struct KaSeries *ka_run(const struct KaConfig *cfg);

// Run the configured experiment and write series + snapshots under
// `out_dir`, like the CLI does. Returns `Tolerance` when the run finished
// but breached a configured tolerance.
//
// # Safety
// `cfg` must be a live handle; `out_dir` a NUL-terminated path.
enum KaStatus ka_run_to_dir(const struct KaConfig *cfg, const char *out_dir);

// Number of rows in a series.
//
// # Safety
// `series` must be a live handle from [`ka_run`].
size_t ka_series_rows(const struct KaSeries *series);

// Number of columns in a series.
//
// # Safety
// `series` must be a live handle from [`ka_run`].
size_t ka_series_cols(const struct KaSeries *series);

// Value at `(row, col)`; NaN when out of range.
//
// # Safety
// `series` must be a live handle from [`ka_run`].
double ka_series_value(const struct KaSeries *series, size_t row, size_t col);

// Copy the column name at `col` into `buf` (NUL-terminated, truncated).
// Returns the full name length, or 0 when out of range.
//
// # Safety
// `series` must be a live handle; `buf` must point to `len` writable
// bytes (or be null to query the length).
size_t ka_series_column_name(const struct KaSeries *series, size_t col, char *buf, size_t len);

// Release a series handle.
//
// # Safety
// `series` must come from [`ka_run`] and not be used afterwards.
void ka_series_free(struct KaSeries *series);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KINALIGN_H */
