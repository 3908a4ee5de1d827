#ifndef EFFHAM_H
#define EFFHAM_H

/* Generated by cbindgen from effham-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes mirrored by the CLI exit codes (0 ok, 2 config, 3
 * resonance/validation, 4 integrator step).
 */
typedef enum EffhamStatus {
  EFFHAM_STATUS_OK = 0,
  /**
   * Runtime failure outside the categories below (I/O, numerics).
   */
  EFFHAM_STATUS_RUNTIME = 1,
  /**
   * Configuration parse or schema error.
   */
  EFFHAM_STATUS_CONFIG = 2,
  /**
   * Physics validation failure (duplicate detunings, near-resonance,
   * zero strengths, non-Hermitian input).
   */
  EFFHAM_STATUS_VALIDATION = 3,
  /**
   * Integrator step too coarse for the declared fastest frequency.
   */
  EFFHAM_STATUS_STEP = 4,
  /**
   * A required pointer argument was null.
   */
  EFFHAM_STATUS_NULL_ARGUMENT = 5,
  /**
   * A path or string argument was not valid UTF-8.
   */
  EFFHAM_STATUS_UTF8 = 6,
} EffhamStatus;

/**
 * Opaque run handle: a parsed and schema-validated configuration.
 */
typedef struct EffhamRun EffhamRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Load and schema-validate a TOML run configuration.
 *
 * On success writes a fresh handle to `out` and returns `Ok`; the handle
 * must be released with [`effham_run_free`].
 *
 * # Safety
 * `config_path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum EffhamStatus effham_run_load(const char *config_path, struct EffhamRun **out);

/**
 * Release a handle obtained from [`effham_run_load`]. Null is a no-op.
 *
 * # Safety
 * `run` must be null or a pointer returned by [`effham_run_load`] that has
 * not been freed yet.
 */
void effham_run_free(struct EffhamRun *run);

/**
 * Dimensionless perturbative parameter λ = g/Δ of the loaded model.
 *
 * # Safety
 * `run` and `out` must be valid pointers.
 */
enum EffhamStatus effham_run_lambda(const struct EffhamRun *run, double *out);

/**
 * Total dimension of the buffered operator space.
 *
 * # Safety
 * `run` and `out` must be valid pointers.
 */
enum EffhamStatus effham_run_dimension(const struct EffhamRun *run, uintptr_t *out);

/**
 * Compute the C/Z decomposition and write c_operators.json, z_polys.json
 * and summary.json. `out_dir` may be null to use the configured directory.
 *
 * # Safety
 * `run` must be a live handle; `out_dir` null or NUL-terminated.
 */
enum EffhamStatus effham_decompose(const struct EffhamRun *run, const char *out_dir);

/**
 * Benchmark the dressed and effective evolutors against exact propagation
 * and write compare.csv.
 *
 * # Safety
 * As for [`effham_decompose`].
 */
enum EffhamStatus effham_compare(const struct EffhamRun *run, const char *out_dir);

/**
 * Truncation-error sweep over `n` perturbative parameters; writes
 * sweep.csv and summary.json.
 *
 * # Safety
 * `lambdas` must point to `n` doubles; other arguments as above.
 */
enum EffhamStatus effham_sweep(const struct EffhamRun *run,
                               const double *lambdas,
                               uintptr_t n,
                               const char *out_dir);

/**
 * Copy the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length in bytes, excluding
 * the NUL.
 *
 * # Safety
 * `buf` must point to `len` writable bytes, or be null (query mode).
 */
uintptr_t effham_last_error(char *buf, uintptr_t len);

/**
 * Static version string of the engine.
 */
const char *effham_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EFFHAM_H */
